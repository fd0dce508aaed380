"""Supervision losses over an alpha matte and their exact subgradients.

All losses take the matte either as an :class:`AlphaMatte` or a raw
``(H, W)`` array (finite-difference probes step slightly outside [0, 1]).
Gradients never flow through neighbor selection or color distances; those
depend only on the fixed image.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from enum import Enum
from typing import Callable

import numpy as np

from .core import AlphaMatte, ParameterError, Trimap, check_same_shape
from .neighbors import NeighborField, affinity_weights


class Normalization(str, Enum):
    REFERENCE = "reference"  # mean over all neighbor terms
    PIXEL = "pixel"  # per-pixel sums averaged over pixels


class Penalty(str, Enum):
    L1 = "l1"
    BCE = "bce"


class LabelMode(str, Enum):
    TRIMAP = "trimap"  # supervise known pixels only
    MASK = "mask"  # binarize labels (unknown -> foreground) and supervise all


class Policy(str, Enum):
    KNOWN = "known"
    AFFINITY = "known+affinity"
    DC = "known+dc"
    DDC = "known+ddc"


@dataclass(frozen=True)
class KnownLossSpec:
    penalty: Penalty = Penalty.L1
    label_mode: LabelMode = LabelMode.TRIMAP
    eps: float = 1e-6

    def __post_init__(self) -> None:
        object.__setattr__(self, "penalty", Penalty(self.penalty))
        object.__setattr__(self, "label_mode", LabelMode(self.label_mode))
        if not 0.0 < self.eps < 0.5:
            raise ParameterError(f"BCE clamp must lie in (0, 0.5), got {self.eps}")


@dataclass
class LossResult:
    value: float
    gradient: np.ndarray
    degenerate: bool = False
    parts: dict[str, float] = dc_field(default_factory=dict)


def _as_array(alpha) -> np.ndarray:
    if isinstance(alpha, AlphaMatte):
        return alpha.data
    return np.asarray(alpha, dtype=np.float64)


def _gather(a: np.ndarray, field: NeighborField) -> np.ndarray:
    ext = np.append(a, 0.0)
    idx = np.where(field.mask, field.index, field.pad_index)
    return ext[idx]


def _scatter(field: NeighborField, center: np.ndarray, neighbor: np.ndarray) -> np.ndarray:
    """Sum per-term contributions into the center pixel and the neighbor."""
    n = field.n_pixels
    k = field.index.shape[1]
    rows = np.repeat(np.arange(n), k)
    idx = np.where(field.mask, field.index, field.pad_index).ravel()
    g = np.bincount(rows, weights=center.ravel(), minlength=n)
    g += np.bincount(idx, weights=neighbor.ravel(), minlength=n + 1)[:n]
    return g


def _norm(field: NeighborField, mode: Normalization) -> float:
    mode = Normalization(mode)
    return float(field.n_terms if mode is Normalization.REFERENCE else field.n_pixels)


def _min_abs_into_pixels(field: NeighborField, r: np.ndarray) -> np.ndarray:
    """Per pixel, smallest |r| over the terms that touch it."""
    n = field.n_pixels
    k = field.index.shape[1]
    out = np.full(n + 1, np.inf)
    ar = np.where(field.mask, np.abs(r), np.inf)
    rows = np.repeat(np.arange(n), k)
    idx = np.where(field.mask, field.index, field.pad_index).ravel()
    np.minimum.at(out, rows, ar.ravel())
    np.minimum.at(out, idx, ar.ravel())
    return out[:n]


# -- known loss -----------------------------------------------------------


def _known_targets(trimap: Trimap, spec: KnownLossSpec):
    if spec.label_mode is LabelMode.TRIMAP:
        sup = trimap.known
        t = trimap.labels
    else:
        sup = np.ones(trimap.shape, dtype=bool)
        t = (trimap.labels >= 0.5).astype(np.float64)
    return sup, t


def known_loss(alpha, trimap: Trimap, spec: KnownLossSpec = KnownLossSpec()) -> LossResult:
    """Penalty against trimap targets, averaged over supervised pixels.

    Averaging over known pixels only equals the whole-image mean scaled by
    N / N_known.
    """
    a = _as_array(alpha)
    check_same_shape(a.shape, trimap.shape)
    sup, t = _known_targets(trimap, spec)
    n_sup = int(sup.sum())
    grad = np.zeros_like(a)
    if n_sup == 0:
        return LossResult(0.0, grad, degenerate=True)
    if spec.penalty is Penalty.L1:
        r = a - t
        value = float(np.abs(r[sup]).sum() / n_sup)
        grad[sup] = np.sign(r[sup]) / n_sup
    else:
        ah = np.clip(a, spec.eps, 1.0 - spec.eps)
        ce = -(t * np.log(ah) + (1.0 - t) * np.log(1.0 - ah))
        value = float(ce[sup].sum() / n_sup)
        inside = (a > spec.eps) & (a < 1.0 - spec.eps)
        d = np.where(inside, -t / ah + (1.0 - t) / (1.0 - ah), 0.0)
        grad[sup] = d[sup] / n_sup
    return LossResult(value, grad)


def known_kinks(alpha, trimap: Trimap, spec: KnownLossSpec = KnownLossSpec()) -> np.ndarray:
    a = _as_array(alpha)
    sup, t = _known_targets(trimap, spec)
    if spec.penalty is Penalty.L1:
        r = np.abs(a - t)
    else:
        r = np.minimum(np.abs(a - spec.eps), np.abs(a - 1.0 + spec.eps))
    return np.where(sup, r, np.inf)


# -- nonlocal losses ------------------------------------------------------


def affinity_loss(
    alpha,
    field: NeighborField,
    mode: Normalization = Normalization.REFERENCE,
    weights: np.ndarray | None = None,
) -> LossResult:
    """Mean absolute residual of the nonlocal relation ``A @ alpha = alpha``.

    Both normalization modes divide by the pixel count (one residual per
    pixel); ``mode`` is accepted for a uniform interface.
    """
    Normalization(mode)
    a = _as_array(alpha)
    check_same_shape(a.shape, field.shape)
    w = affinity_weights(field) if weights is None else weights
    flat = a.ravel()
    r = (w * _gather(flat, field)).sum(axis=1) - flat
    n = field.n_pixels
    s = np.sign(r)
    g = _scatter(field, np.zeros_like(w), s[:, None] * w) - s
    return LossResult(float(np.abs(r).sum() / n), (g / n).reshape(a.shape))


def affinity_kinks(alpha, field: NeighborField, weights: np.ndarray | None = None) -> np.ndarray:
    a = _as_array(alpha)
    w = affinity_weights(field) if weights is None else weights
    flat = a.ravel()
    r = (w * _gather(flat, field)).sum(axis=1) - flat
    per_term = np.where(field.mask, r[:, None], np.inf)
    return _min_abs_into_pixels(field, per_term).reshape(a.shape)


def dc_loss(alpha, field: NeighborField, mode: Normalization = Normalization.REFERENCE) -> LossResult:
    """Terms ``| |a_i - a_j| - d_ij |``; alpha distances copy image distances."""
    a = _as_array(alpha)
    check_same_shape(a.shape, field.shape)
    flat = a.ravel()
    diff = flat[:, None] - _gather(flat, field)
    r = np.abs(diff) - field.distance
    terms = np.where(field.mask, np.abs(r), 0.0)
    norm = _norm(field, mode)
    s = np.where(field.mask, np.sign(r) * np.sign(diff), 0.0)
    g = _scatter(field, s, -s) / norm
    return LossResult(float(terms.sum() / norm), g.reshape(a.shape))


def dc_kinks(alpha, field: NeighborField) -> np.ndarray:
    a = _as_array(alpha)
    flat = a.ravel()
    diff = flat[:, None] - _gather(flat, field)
    r = np.minimum(np.abs(diff), np.abs(np.abs(diff) - field.distance))
    # a self pair has diff == 0 identically and never moves under a probe
    self_pair = field.index == np.arange(field.n_pixels)[:, None]
    r = np.where(self_pair, np.inf, r)
    return _min_abs_into_pixels(field, r).reshape(a.shape)


def ddc_loss(alpha, field: NeighborField, mode: Normalization = Normalization.REFERENCE) -> LossResult:
    """Terms ``|a_i - a_j - d_ij|`` with ``i`` the window center."""
    a = _as_array(alpha)
    check_same_shape(a.shape, field.shape)
    flat = a.ravel()
    r = flat[:, None] - _gather(flat, field) - field.distance
    terms = np.where(field.mask, np.abs(r), 0.0)
    norm = _norm(field, mode)
    s = np.where(field.mask, np.sign(r), 0.0)
    g = _scatter(field, s, -s) / norm
    return LossResult(float(terms.sum() / norm), g.reshape(a.shape))


def ddc_kinks(alpha, field: NeighborField) -> np.ndarray:
    a = _as_array(alpha)
    flat = a.ravel()
    r = flat[:, None] - _gather(flat, field) - field.distance
    self_pair = field.index == np.arange(field.n_pixels)[:, None]
    r = np.where(self_pair, np.inf, r)
    return _min_abs_into_pixels(field, r).reshape(a.shape)


def ddc_terms(alpha, field: NeighborField) -> np.ndarray:
    """Per-term DDC values ``(N, K)``; empty slots hold 0."""
    flat = _as_array(alpha).ravel()
    r = flat[:, None] - _gather(flat, field) - field.distance
    return np.where(field.mask, np.abs(r), 0.0)


# -- total ----------------------------------------------------------------


def total_loss(
    alpha,
    trimap: Trimap,
    field: NeighborField,
    lam: float = 10.0,
    known_spec: KnownLossSpec = KnownLossSpec(),
    mode: Normalization = Normalization.REFERENCE,
    policy: Policy = Policy.DDC,
    weights: np.ndarray | None = None,
) -> LossResult:
    """``known + lam * prior`` where the prior is chosen by ``policy``."""
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    policy = Policy(policy)
    known = known_loss(alpha, trimap, known_spec)
    if policy is Policy.KNOWN:
        prior = LossResult(0.0, np.zeros_like(known.gradient))
    elif policy is Policy.AFFINITY:
        prior = affinity_loss(alpha, field, mode, weights)
    elif policy is Policy.DC:
        prior = dc_loss(alpha, field, mode)
    else:
        prior = ddc_loss(alpha, field, mode)
    value = known.value + lam * prior.value
    grad = known.gradient + lam * prior.gradient
    return LossResult(
        value,
        grad,
        degenerate=known.degenerate,
        parts={"known": known.value, "prior": prior.value},
    )


# -- gradient check -------------------------------------------------------


@dataclass
class GradCheckReport:
    max_rel_error: float
    checked: int
    skipped: int
    worst_index: tuple[int, ...] | None = None


def check_gradient(
    loss: Callable[[np.ndarray], LossResult],
    alpha,
    h: float = 1e-5,
    kinks: Callable[[np.ndarray], np.ndarray] | None = None,
    floor: float = 1e-6,
) -> GradCheckReport:
    """Compare the analytic gradient with central differences.

    Coordinates whose nearest kink (smallest |residual| of any term they
    enter) is closer than ``10 * h`` are skipped. The relative error of a
    coordinate is ``|g - fd| / max(|g|, |fd|, floor)``.
    """
    if not 1e-8 < h < 1e-3:
        raise ParameterError(f"step must lie in (1e-8, 1e-3), got {h}")
    a = np.array(_as_array(alpha), dtype=np.float64)
    g = np.asarray(loss(a).gradient, dtype=np.float64)
    skip = np.zeros(a.shape, dtype=bool) if kinks is None else np.asarray(kinks(a)) < 10 * h
    worst, worst_at, checked = 0.0, None, 0
    for pos in np.ndindex(a.shape):
        if skip[pos]:
            continue
        old = a[pos]
        a[pos] = old + h
        up = loss(a).value
        a[pos] = old - h
        down = loss(a).value
        a[pos] = old
        fd = (up - down) / (2 * h)
        err = abs(g[pos] - fd) / max(abs(g[pos]), abs(fd), floor)
        checked += 1
        if err > worst:
            worst, worst_at = err, pos
    return GradCheckReport(worst, checked, int(skip.sum()), worst_at)


def loss_probe(
    name: str,
    trimap: Trimap,
    field: NeighborField,
    mode: Normalization = Normalization.REFERENCE,
    known_spec: KnownLossSpec = KnownLossSpec(),
):
    """Return ``(loss_fn, kink_fn)`` for a loss selected by name."""
    if name == "known":
        return (lambda a: known_loss(a, trimap, known_spec)), (lambda a: known_kinks(a, trimap, known_spec))
    if name == "affinity":
        w = affinity_weights(field)
        return (lambda a: affinity_loss(a, field, mode, w)), (lambda a: affinity_kinks(a, field, w))
    if name == "dc":
        return (lambda a: dc_loss(a, field, mode)), (lambda a: dc_kinks(a, field))
    if name == "ddc":
        return (lambda a: ddc_loss(a, field, mode)), (lambda a: ddc_kinks(a, field))
    raise ParameterError(f"unknown loss {name!r}")
