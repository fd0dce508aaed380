"""Matting error metrics: SAD, MAD, MSE, Grad, Conn and their transition-region variants.

SAD, Grad and Conn are sums reported in thousands; MAD and MSE are plain
means.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .core import AlphaMatte, DegenerateInputError, Trimap, check_same_shape, region_masks

GRAD_SIGMA = 1.4
CONN_STEP = 0.1
CONN_THETA = 0.15


def _arr(m) -> np.ndarray:
    return m.data if isinstance(m, AlphaMatte) else np.asarray(m, dtype=np.float64)


def pixel_metrics(pred, gt, region: np.ndarray | None = None) -> dict[str, float]:
    p, g = _arr(pred), _arr(gt)
    check_same_shape(p.shape, g.shape)
    sel = np.ones(p.shape, dtype=bool) if region is None else np.asarray(region, dtype=bool)
    n = int(sel.sum())
    if n == 0:
        raise DegenerateInputError("metric region is empty")
    diff = (p - g)[sel]
    # fsum is correctly rounded, so totals do not depend on summation order
    sad = math.fsum(np.abs(diff).tolist())
    return {"sad": sad / 1000.0, "mad": sad / n, "mse": math.fsum((diff**2).tolist()) / n}


def grad_radius(sigma: float = GRAD_SIGMA) -> int:
    return int(math.ceil(3 * sigma))


def gradient_magnitude(a: np.ndarray, sigma: float = GRAD_SIGMA) -> np.ndarray:
    r = grad_radius(sigma)
    gx = ndimage.gaussian_filter1d(a, sigma, axis=1, order=1, mode="reflect", radius=r)
    gx = ndimage.gaussian_filter1d(gx, sigma, axis=0, order=0, mode="reflect", radius=r)
    gy = ndimage.gaussian_filter1d(a, sigma, axis=0, order=1, mode="reflect", radius=r)
    gy = ndimage.gaussian_filter1d(gy, sigma, axis=1, order=0, mode="reflect", radius=r)
    return np.hypot(gx, gy)


def grad_metric(pred, gt, sigma: float = GRAD_SIGMA) -> float:
    p, g = _arr(pred), _arr(gt)
    check_same_shape(p.shape, g.shape)
    support = 2 * grad_radius(sigma) + 1
    if min(p.shape) < support:
        raise DegenerateInputError(f"image {p.shape} smaller than the {support}-pixel gradient filter")
    d = gradient_magnitude(p, sigma) - gradient_magnitude(g, sigma)
    return float((d**2).sum() / 1000.0)


def _largest_component(mask: np.ndarray) -> np.ndarray:
    labels, n = ndimage.label(mask)  # default structure is 4-connected
    if n == 0:
        return np.zeros_like(mask)
    sizes = np.bincount(labels.ravel())[1:]
    # labels follow raster order, so argmax's first hit has the smallest min index
    return labels == (int(np.argmax(sizes)) + 1)


def connectivity_levels(p: np.ndarray, g: np.ndarray, step: float = CONN_STEP) -> np.ndarray:
    """Per pixel, the largest threshold whose common largest component holds it."""
    n_steps = int(round(1.0 / step))
    level = np.zeros(p.shape)
    for k in range(1, n_steps + 1):
        theta = k / n_steps
        omega = _largest_component((p >= theta) & (g >= theta))
        level[omega] = theta
    return level


def conn_metric(pred, gt, step: float = CONN_STEP, theta: float = CONN_THETA) -> float:
    p, g = _arr(pred), _arr(gt)
    check_same_shape(p.shape, g.shape)
    level = connectivity_levels(p, g, step)
    dp, dg = p - level, g - level
    phi_p = np.where(dp >= theta, 1.0 - dp, 1.0)
    phi_g = np.where(dg >= theta, 1.0 - dg, 1.0)
    return math.fsum(np.abs(phi_p - phi_g).ravel().tolist()) / 1000.0


@dataclass
class MetricReport:
    sad: float
    mad: float
    mse: float
    grad: float | None
    conn: float
    sad_t: float | None
    mse_t: float | None
    n_pixels: int
    n_unknown: int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        return cls.from_dict(json.loads(text))


def evaluate(pred, gt, trimap: Trimap) -> MetricReport:
    """Whole-image metrics plus SAD/MSE over the trimap's unknown region.

    ``grad`` is None when the image is smaller than the gradient filter;
    ``sad_t``/``mse_t`` are None when the trimap has no unknown pixel.
    """
    p, g = _arr(pred), _arr(gt)
    check_same_shape(p.shape, g.shape, trimap.shape)
    whole = pixel_metrics(p, g)
    unknown = region_masks(trimap).unknown
    n_unknown = int(unknown.sum())
    if n_unknown:
        t = pixel_metrics(p, g, unknown)
        sad_t, mse_t = t["sad"], t["mse"]
    else:
        sad_t = mse_t = None
    try:
        grad = grad_metric(p, g)
    except DegenerateInputError:
        grad = None
    return MetricReport(
        sad=whole["sad"],
        mad=whole["mad"],
        mse=whole["mse"],
        grad=grad,
        conn=conn_metric(p, g),
        sad_t=sad_t,
        mse_t=mse_t,
        n_pixels=int(p.size),
        n_unknown=n_unknown,
    )
