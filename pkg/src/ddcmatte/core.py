"""Domain types shared across the package.

Every raster is stored as a float64 numpy array. Images are ``(H, W, C)``
with ``C`` in ``{1, 3}``; mattes and trimaps are ``(H, W)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BACKGROUND = 0.0
UNKNOWN = 0.5
FOREGROUND = 1.0


class ParameterError(ValueError):
    """Invalid argument value (window size, kernel size, geometry...)."""


class DegenerateInputError(ValueError):
    """Input is valid in shape but carries no usable signal (empty region...)."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ImagePlane:
    data: np.ndarray  # (H, W, C), values in [0, 1]

    def __post_init__(self) -> None:
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3:
            raise ParameterError(f"image must be 2-D or 3-D, got shape {a.shape}")
        if a.shape[2] not in (1, 3):
            raise ParameterError(f"image must have 1 or 3 channels, got {a.shape[2]}")
        if not np.all(np.isfinite(a)) or a.min(initial=0.0) < 0.0 or a.max(initial=0.0) > 1.0:
            raise ParameterError("image values must lie in [0, 1]")
        object.__setattr__(self, "data", _frozen(a))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]


@dataclass(frozen=True, eq=False)
class AlphaMatte:
    data: np.ndarray  # (H, W), values in [0, 1]

    def __post_init__(self) -> None:
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 2:
            raise ParameterError(f"alpha matte must be 2-D, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or a.min(initial=0.0) < 0.0 or a.max(initial=0.0) > 1.0:
            raise ParameterError("alpha values must lie in [0, 1]")
        object.__setattr__(self, "data", _frozen(a))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True, eq=False)
class Trimap:
    labels: np.ndarray  # (H, W), each of BACKGROUND / UNKNOWN / FOREGROUND

    def __post_init__(self) -> None:
        a = np.asarray(self.labels, dtype=np.float64)
        if a.ndim != 2:
            raise ParameterError(f"trimap must be 2-D, got shape {a.shape}")
        ok = (a == BACKGROUND) | (a == UNKNOWN) | (a == FOREGROUND)
        if not np.all(ok):
            raise ParameterError("trimap labels must be exactly 0, 0.5 or 1")
        object.__setattr__(self, "labels", _frozen(a))

    @classmethod
    def from_masks(cls, fg: np.ndarray, bg: np.ndarray) -> "Trimap":
        fg = np.asarray(fg, dtype=bool)
        bg = np.asarray(bg, dtype=bool)
        if np.any(fg & bg):
            raise ParameterError("foreground and background masks overlap")
        labels = np.full(fg.shape, UNKNOWN)
        labels[fg] = FOREGROUND
        labels[bg] = BACKGROUND
        return cls(labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    @property
    def n_pixels(self) -> int:
        return self.labels.size

    @property
    def known(self) -> np.ndarray:
        return self.labels != UNKNOWN

    @property
    def n_known(self) -> int:
        return int(self.known.sum())

    @property
    def n_unknown(self) -> int:
        return self.n_pixels - self.n_known


@dataclass(frozen=True)
class RegionMasks:
    fg: np.ndarray
    bg: np.ndarray
    unknown: np.ndarray


def region_masks(trimap: Trimap) -> RegionMasks:
    fg = trimap.labels == FOREGROUND
    bg = trimap.labels == BACKGROUND
    return RegionMasks(fg=fg, bg=bg, unknown=~(fg | bg))


def quantize_alpha(matte: AlphaMatte | np.ndarray, bits: int = 8) -> np.ndarray:
    """Map [0, 1] values to unsigned integers with round-half-up."""
    data = matte.data if isinstance(matte, AlphaMatte) else np.asarray(matte, dtype=np.float64)
    top = (1 << bits) - 1
    q = np.floor(data * top + 0.5)
    return np.clip(q, 0, top).astype(np.uint8 if bits == 8 else np.uint16)


def dequantize_alpha(grid: np.ndarray, bits: int = 8) -> AlphaMatte:
    top = (1 << bits) - 1
    return AlphaMatte(np.asarray(grid, dtype=np.float64) / top)


def check_same_shape(*shapes: tuple[int, ...]) -> None:
    first = tuple(shapes[0])
    for s in shapes[1:]:
        if tuple(s) != first:
            raise ParameterError(f"dimension mismatch: {first} vs {tuple(s)}")
