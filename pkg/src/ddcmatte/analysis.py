"""Synthetic scenes and executable checks of the analytical claims.

Covers compositing, the window-mean recursion along a thin hair, the
pairwise lower bound of the directional loss, and symmetric affinity scores
on a linear ramp.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    AlphaMatte,
    ImagePlane,
    ParameterError,
    Trimap,
    check_same_shape,
)
from .neighbors import NeighborField, Padding, affinity_weights, build_neighbor_field


def composite(alpha: AlphaMatte, fg: ImagePlane, bg: ImagePlane) -> ImagePlane:
    check_same_shape(alpha.shape, fg.shape, bg.shape)
    if fg.channels != bg.channels:
        raise ParameterError("foreground and background channel counts differ")
    a = alpha.data[:, :, None]
    return ImagePlane(np.clip(a * fg.data + (1.0 - a) * bg.data, 0.0, 1.0))


def solve_alpha_from_composite(image: ImagePlane, fg_color, bg_color) -> np.ndarray:
    """Invert the compositing equation for constant F, B (least squares over channels)."""
    f = np.atleast_1d(np.asarray(fg_color, dtype=np.float64))
    b = np.atleast_1d(np.asarray(bg_color, dtype=np.float64))
    diff = f - b
    return ((image.data - b) @ diff) / (diff @ diff)


# -- scenes ---------------------------------------------------------------


# hair: a yellow animal against a blue background; the others are gray 1 / 0
DEFAULT_COLORS = {
    "ramp": ((1.0,), (0.0,)),
    "texture": ((1.0,), (0.0,)),
    "hair": ((0.9, 0.7, 0.1), (0.1, 0.3, 0.8)),
}


@dataclass(frozen=True)
class SceneSpec:
    kind: str  # "ramp" | "hair" | "texture"
    height: int = 16
    width: int = 16
    ramp_width: int = 6
    hair_length: int = 20
    hair_thickness: int = 1
    amplitude: float = 0.1
    period: float = 4.0
    margin: int = 2
    fg_color: Sequence[float] | None = None
    bg_color: Sequence[float] | None = None
    quantize: bool = True  # snap the image to the 8-bit grid so PNG round trips are lossless

    def __post_init__(self) -> None:
        if self.kind not in ("ramp", "hair", "texture"):
            raise ParameterError(f"unknown scene kind {self.kind!r}")
        dfg, dbg = DEFAULT_COLORS[self.kind]
        fg = tuple(float(v) for v in np.atleast_1d(dfg if self.fg_color is None else self.fg_color))
        bg = tuple(float(v) for v in np.atleast_1d(dbg if self.bg_color is None else self.bg_color))
        object.__setattr__(self, "fg_color", fg)
        object.__setattr__(self, "bg_color", bg)
        if len(fg) != len(bg) or len(fg) not in (1, 3):
            raise ParameterError("colors must both have 1 or 3 channels")
        if fg == bg:
            raise ParameterError("foreground and background colors must differ")
        if not all(0.0 <= v <= 1.0 for v in fg + bg):
            raise ParameterError("colors must lie in [0, 1]")
        if self.height < 1 or self.width < 1 or self.margin < 0:
            raise ParameterError("canvas must be non-empty and margin non-negative")


GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _plane(color, shape) -> ImagePlane:
    return ImagePlane(np.broadcast_to(np.asarray(color), shape + (len(color),)))


def make_scene(spec: SceneSpec) -> tuple[ImagePlane, AlphaMatte, Trimap]:
    """Build (image, ground-truth alpha, trimap) for a synthetic scene."""
    H, W = spec.height, spec.width
    shape = (H, W)
    fg = _plane(spec.fg_color, shape).data.copy()
    bg = _plane(spec.bg_color, shape)
    alpha = np.zeros(shape)
    unknown = np.zeros(shape, dtype=bool)

    if spec.kind in ("ramp", "texture"):
        w = spec.ramp_width
        if w < 2 or w > W:
            raise ParameterError(f"ramp width {w} does not fit a canvas of width {W}")
        if spec.kind == "ramp":
            c0 = (W - w) // 2
        else:
            # leave most of the canvas to the textured known foreground
            c0 = W - w - spec.margin - 2
        if c0 < spec.margin + 1:
            raise ParameterError(f"ramp width {w} does not fit a canvas of width {W}")
        alpha[:, :c0] = 1.0
        alpha[:, c0 : c0 + w] = 1.0 - np.arange(w) / (w - 1)
        lo, hi = max(c0 - spec.margin, 0), min(c0 + w + spec.margin, W)
        unknown[:, lo:hi] = True
        if spec.kind == "texture" and spec.amplitude != 0:
            if spec.period <= 0:
                raise ParameterError("texture period must be positive")
            yy, xx = np.mgrid[0:H, 0:W]
            # diagonal stripes; the irrational row shift avoids exact value repeats
            wave = 0.5 + 0.5 * np.sin(2 * np.pi * (xx + GOLDEN * yy) / spec.period)
            base = np.asarray(spec.fg_color)
            sign = np.where(base - spec.amplitude >= 0.0, -1.0, 1.0)
            fg = np.clip(base + sign * spec.amplitude * wave[:, :, None], 0.0, 1.0)
    else:
        L, t = spec.hair_length, spec.hair_thickness
        block = max(W - L - spec.margin - 1, 0)
        if block < 2 or t < 1 or t > H - 2 * spec.margin:
            raise ParameterError(
                f"hair of length {L} does not fit a {H}x{W} canvas with margin {spec.margin}"
            )
        r0 = (H - t) // 2
        alpha[:, :block] = 1.0
        alpha[r0 : r0 + t, block : block + L] = 1.0
        unknown[
            max(r0 - spec.margin, 0) : r0 + t + spec.margin,
            block : min(block + L + spec.margin, W),
        ] = True

    gt = AlphaMatte(alpha)
    image = composite(gt, ImagePlane(fg), bg)
    if spec.quantize:
        image = ImagePlane(np.floor(image.data * 255.0 + 0.5) / 255.0)
    fg_known = (alpha == 1.0) & ~unknown
    bg_known = (alpha == 0.0) & ~unknown
    # any fractional pixel outside the band is still unknown
    return image, gt, Trimap.from_masks(fg_known, bg_known)


def hair_pixels(spec: SceneSpec) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of the hair, root to tip."""
    H, W = spec.height, spec.width
    L, t = spec.hair_length, spec.hair_thickness
    block = max(W - L - spec.margin - 1, 0)
    r0 = (H - t) // 2
    rows = np.repeat(np.arange(r0, r0 + t), L)
    cols = np.tile(np.arange(block, block + L), t)
    return rows, cols


# -- window-mean recursion along a hair ----------------------------------


@dataclass(frozen=True)
class HairSequence:
    values: np.ndarray  # alpha_1..alpha_T stored 0-based
    window: int

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ParameterError("sequence must be 1-D")
        if self.window % 2 == 0 or self.window < 3:
            raise ParameterError(f"window must be odd and >= 3, got {self.window}")
        object.__setattr__(self, "values", v)

    @property
    def prefix_sums(self) -> np.ndarray:
        """S_0..S_T with S_0 = 0."""
        return np.concatenate([[0.0], np.cumsum(self.values)])

    @classmethod
    def from_polynomial(cls, coeffs: Sequence[float], length: int, window: int) -> "HairSequence":
        """Evaluate ``sum c_k t^k`` at t = 1..length and rescale into [0, 1]."""
        t = np.arange(1, length + 1, dtype=np.float64)
        v = np.polynomial.polynomial.polyval(t, coeffs)
        span = v.max() - v.min()
        v = (v - v.min()) / span if span > 0 else np.zeros_like(v)
        return cls(v, window)


@dataclass
class BrakingReport:
    recursion: np.ndarray  # r_t for t = K+1..T
    window_mean: np.ndarray  # e_t for t = K..T
    max_disagreement: float

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.recursion).max(initial=0.0))


def braking_residual(seq: HairSequence) -> BrakingReport:
    """Residuals of the window-mean relation and of its recursion form.

    ``e_t = (S_{t-1} - S_{t-K} + a_t) / K - a_{t-(K-1)/2}`` and
    ``r_t = a_t - a_{t-K} - K (a_{t-(K-1)/2} - a_{t-(K+1)/2})``; the second is
    the first differenced, ``r_t = K (e_t - e_{t-1})``.
    """
    K = seq.window
    a = seq.values
    T = a.size
    if T <= K:
        raise ParameterError(f"sequence length {T} must exceed window {K}")
    S = seq.prefix_sums
    h = (K - 1) // 2

    def at(t):  # 1-based access
        return a[np.asarray(t) - 1]

    te = np.arange(K, T + 1)
    e = (S[te - 1] - S[te - K] + at(te)) / K - at(te - h)
    tr = np.arange(K + 1, T + 1)
    r = at(tr) - at(tr - K) - K * (at(tr - h) - at(tr - h - 1))
    disagreement = np.abs(r - K * (e[1:] - e[:-1]))
    return BrakingReport(r, e, float(disagreement.max(initial=0.0)))


# -- pairwise lower bound ------------------------------------------------


@dataclass
class PairBoundReport:
    mutual_pairs: int
    violations: int
    worst_slack: float
    non_tight: int


def pair_bound_check(image: ImagePlane, alpha, field: NeighborField, tol: float = 1e-12) -> PairBoundReport:
    """Check ``term_ij + term_ji >= 2 d_ij`` on every mutually selected pair.

    A pair is non-tight when ``|a_i - a_j| > d_ij`` (the bound is strict).
    """
    check_same_shape(image.shape, field.shape)
    a = alpha.data if isinstance(alpha, AlphaMatte) else np.asarray(alpha, dtype=np.float64)
    flat = a.ravel()
    pairs = field.mutual_pairs()
    if pairs.size == 0:
        return PairBoundReport(0, 0, float("inf"), 0)
    i, j = pairs[:, 0], pairs[:, 1]
    img = image.data.reshape(-1, image.channels)
    d = np.sqrt(np.sum((img[i] - img[j]) ** 2, axis=1))
    diff = flat[i] - flat[j]
    total = np.abs(diff - d) + np.abs(-diff - d)
    slack = total - 2 * d
    return PairBoundReport(
        mutual_pairs=int(pairs.shape[0]),
        violations=int(np.sum(slack < -tol)),
        worst_slack=float(slack.min()),
        non_tight=int(np.sum(np.abs(diff) > d)),
    )


# -- symmetric scores on a ramp -----------------------------------------


def ramp_image(K: int, slope: float, offset: float) -> ImagePlane:
    """Linear ramp on a 1 x 2K canvas, clamped to [0, 1] outside the probed window.

    Only the window of the center pixel (index K) must stay linear.
    """
    x = np.arange(2 * K, dtype=np.float64)
    v = slope * x + offset
    window = v[K - K // 2 : K + K // 2 + 1]
    if window.min() < 0 or window.max() > 1:
        raise ParameterError("ramp leaves [0, 1] inside the center window")
    return ImagePlane(np.clip(v, 0.0, 1.0)[None, :])


def symmetry_check(K: int, slope: float, offset: float) -> float:
    """Largest |w(+s) - w(-s)| of the normalized weights at a ramp-interior pixel."""
    image = ramp_image(K, slope, offset)
    field = build_neighbor_field(image, K, Padding.VALID)
    w = affinity_weights(field)
    center = K  # K // 2 + 1 pixels on the left, K - 1 on the right
    by_offset: dict[int, float] = {}
    for idx, wt, m in zip(field.index[center], w[center], field.mask[center]):
        if m:
            by_offset[int(idx) - center] = float(wt)
    half = K // 2
    if sorted(by_offset) != list(range(-half, half + 1)):
        raise ParameterError("selected neighbors are not the symmetric in-row window")
    return max(abs(by_offset[s] - by_offset[-s]) for s in range(1, half + 1))


def transition_pair_fraction(
    image: ImagePlane, alpha, field: NeighborField, trimap: Trimap, tol: float = 1e-3
) -> tuple[float, int]:
    """Share of mutual pairs touching the unknown band with ``|a_i - a_j| <= d_ij + tol``.

    Returns ``(fraction, pair_count)``; the fraction is 1 when no pair qualifies.
    """
    check_same_shape(image.shape, field.shape, trimap.shape)
    a = alpha.data if isinstance(alpha, AlphaMatte) else np.asarray(alpha, dtype=np.float64)
    pairs = field.mutual_pairs()
    unknown = ~trimap.known.ravel()
    i, j = pairs[:, 0], pairs[:, 1]
    sel = unknown[i] | unknown[j]
    if not sel.any():
        return 1.0, 0
    i, j = i[sel], j[sel]
    img = image.data.reshape(-1, image.channels)
    d = np.sqrt(np.sum((img[i] - img[j]) ** 2, axis=1))
    flat = a.ravel()
    ok = np.abs(flat[i] - flat[j]) <= d + tol
    return float(ok.mean()), int(sel.sum())
