"""Alpha matting by per-image optimization of nonlocal distance-consistency losses."""
from .core import (
    AlphaMatte,
    DegenerateInputError,
    ImagePlane,
    ParameterError,
    Trimap,
    dequantize_alpha,
    quantize_alpha,
    region_masks,
)
from .losses import KnownLossSpec, LabelMode, Normalization, Penalty, Policy, total_loss
from .metrics import MetricReport, evaluate
from .neighbors import NeighborField, Padding, affinity_weights, build_neighbor_field
from .solver import NumericalFailure, SolverConfig, SolveTrace, solve
from .trimap import ErosionSpec, erode_mask, trimap_from_alpha

__version__ = "0.1.0"
