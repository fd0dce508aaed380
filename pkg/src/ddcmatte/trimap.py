"""Trimap synthesis by eroding the binarized alpha matte."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import AlphaMatte, ParameterError, Trimap


@dataclass(frozen=True)
class ErosionSpec:
    """Square erosion kernel, either fixed or drawn per call from odd sizes in a range."""

    kernel: int | None = None
    kernel_range: tuple[int, int] | None = None
    delta: float = 1.0 / 255.0
    seed: int = 0

    def __post_init__(self) -> None:
        if (self.kernel is None) == (self.kernel_range is None):
            raise ParameterError("give exactly one of kernel or kernel_range")
        if self.kernel is not None:
            _check_kernel(self.kernel)
        else:
            lo, hi = self.kernel_range
            if lo < 1 or lo > hi:
                raise ParameterError(f"invalid kernel range [{lo}, {hi}]")
            if not odd_sizes(lo, hi).size:
                raise ParameterError(f"kernel range [{lo}, {hi}] holds no odd size")
        if not 0.0 < self.delta < 0.5:
            raise ParameterError(f"binarize threshold must lie in (0, 0.5), got {self.delta}")

    def draw(self, rng: np.random.Generator | None = None) -> int:
        if self.kernel is not None:
            return self.kernel
        rng = np.random.default_rng(self.seed) if rng is None else rng
        return int(rng.choice(odd_sizes(*self.kernel_range)))


def odd_sizes(lo: int, hi: int) -> np.ndarray:
    start = lo if lo % 2 else lo + 1
    return np.arange(start, hi + 1, 2)


def _check_kernel(k: int) -> None:
    if k < 1:
        raise ParameterError(f"kernel size must be >= 1, got {k}")
    if k % 2 == 0:
        raise ParameterError(f"kernel size must be odd, got {k}")


def erode_mask(mask: np.ndarray, k: int) -> np.ndarray:
    """Binary erosion by a k x k square; outside the image counts as set."""
    _check_kernel(k)
    mask = np.asarray(mask, dtype=bool)
    if k == 1:
        return mask.copy()
    return ndimage.binary_erosion(mask, structure=np.ones((k, k), dtype=bool), border_value=1)


def trimap_from_alpha(
    alpha: AlphaMatte, spec: ErosionSpec, rng: np.random.Generator | None = None
) -> Trimap:
    k = spec.draw(rng)
    a = alpha.data
    fg = erode_mask(a >= 1.0 - spec.delta, k)
    bg = erode_mask(a <= spec.delta, k)
    return Trimap.from_masks(fg, bg)
