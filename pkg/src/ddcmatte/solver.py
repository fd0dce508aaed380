"""Per-image alpha estimation by projected subgradient descent on the total loss."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np

from .core import AlphaMatte, ImagePlane, ParameterError, Trimap, UNKNOWN, check_same_shape
from .losses import (
    KnownLossSpec,
    Normalization,
    Policy,
    total_loss,
)
from .neighbors import NeighborField, Padding, affinity_weights, build_neighbor_field

log = logging.getLogger(__name__)


class NumericalFailure(RuntimeError):
    """The loss or its gradient became non-finite."""


@dataclass(frozen=True)
class SolverConfig:
    window: int = 11
    lam: float = 10.0
    step_size: float = 0.01
    momentum: float = 0.9
    max_iters: int = 2000
    convergence_tol: float = 1e-7
    trace_every: int = 10
    padding: Padding = Padding.VALID
    normalization: Normalization = Normalization.REFERENCE
    known: KnownLossSpec = KnownLossSpec()
    rms_decay: float = 0.999
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "padding", Padding(self.padding))
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        if self.window % 2 == 0 or self.window < 3:
            raise ParameterError(f"window must be odd and >= 3, got {self.window}")
        if not self.lam > 0:
            raise ParameterError("lambda must be positive")
        if not self.step_size > 0:
            raise ParameterError("step size must be positive")
        if not 0 <= self.momentum < 1:
            raise ParameterError("momentum must lie in [0, 1)")
        if self.max_iters < 1 or self.trace_every < 1:
            raise ParameterError("iteration counts must be positive")
        if not self.convergence_tol > 0:
            raise ParameterError("convergence tolerance must be positive")
        if not 0 < self.rms_decay < 1:
            raise ParameterError("RMS decay must lie in (0, 1)")


@dataclass
class TracePoint:
    """Loss parts of the best iterate so far; ``current`` is the latest iterate's total."""

    iteration: int
    total: float
    known: float
    prior: float
    max_grad: float
    current: float


@dataclass
class SolveTrace:
    points: list[TracePoint] = dc_field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    unanchored: bool = False

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "unanchored": self.unanchored,
            "points": [vars(p) for p in self.points],
        }


def init_alpha(trimap: Trimap) -> AlphaMatte:
    """Start from the trimap encoding itself: 1 / 0.5 / 0."""
    return AlphaMatte(trimap.labels.copy())


def solve(
    image: ImagePlane,
    trimap: Trimap,
    config: SolverConfig = SolverConfig(),
    policy: Policy | str = Policy.DDC,
    field: NeighborField | None = None,
) -> tuple[AlphaMatte, SolveTrace]:
    """Minimize ``known + lam * prior`` over the whole matte.

    Each step preconditions the subgradient per pixel by a running RMS of
    past subgradients, applies Nesterov momentum, and projects onto [0, 1].
    The step size is cosine-annealed from ``step_size`` to 0 over
    ``max_iters``. Known pixels are pulled by the known loss, never pinned.

    Subgradient steps are not monotone, so the best iterate seen is kept and
    returned; traced totals are therefore non-increasing.
    """
    policy = Policy(policy)
    check_same_shape(image.shape, trimap.shape)
    if field is None:
        field = build_neighbor_field(image, config.window, config.padding, workers=config.workers)
    weights = affinity_weights(field) if policy is Policy.AFFINITY else None
    trace = SolveTrace(unanchored=trimap.n_known == 0)
    if trace.unanchored:
        log.warning("trimap has no known pixels; solving on the prior alone")

    def evaluate(a):
        res = total_loss(a, trimap, field, config.lam, config.known, config.normalization, policy, weights)
        if not np.isfinite(res.value) or not np.all(np.isfinite(res.gradient)):
            raise NumericalFailure("non-finite loss or gradient")
        return res

    alpha = init_alpha(trimap).data.copy()
    m = np.zeros_like(alpha)
    v = np.zeros_like(alpha)
    beta, rho = config.momentum, config.rms_decay
    history: list[float] = []
    res = evaluate(alpha)
    best, best_res = alpha, res
    for it in range(config.max_iters):
        if res.value < best_res.value:
            best, best_res = alpha, res
        if it % config.trace_every == 0:
            trace.points.append(_point(it, best_res, res))
        history.append(res.value)
        if res.value == 0.0:
            trace.converged = True
            break
        if len(history) > 10:
            old = history[-11]
            if abs(old - res.value) <= config.convergence_tol * max(abs(old), 1e-300):
                trace.converged = True
                break
        g = res.gradient
        v = rho * v + (1.0 - rho) * g * g
        g = g / (np.sqrt(v / (1.0 - rho ** (it + 1))) + 1e-12)
        eta = 0.5 * config.step_size * (1.0 + np.cos(np.pi * it / config.max_iters))
        m = beta * m + g
        alpha = np.clip(alpha - eta * (beta * m + g), 0.0, 1.0)
        res = evaluate(alpha)
    else:
        it = config.max_iters
        if res.value < best_res.value:
            best, best_res = alpha, res
    trace.iterations = it
    if not trace.points or trace.points[-1].iteration != it:
        trace.points.append(_point(it, best_res, res))
    return AlphaMatte(best), trace


def _point(it: int, best, current) -> TracePoint:
    return TracePoint(
        iteration=it,
        total=best.value,
        known=best.parts.get("known", 0.0),
        prior=best.parts.get("prior", 0.0),
        max_grad=float(np.abs(best.gradient).max(initial=0.0)),
        current=current.value,
    )


def unknown_fraction(trimap: Trimap) -> float:
    return float(np.mean(trimap.labels == UNKNOWN))
