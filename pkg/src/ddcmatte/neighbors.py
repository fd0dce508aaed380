"""Windowed top-K similar-pixel selection and affinity weights."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import ImagePlane, ParameterError


class Padding(str, Enum):
    VALID = "valid"
    ZERO = "zero"


# Neighbor slots use two sentinels: ABSENT marks an empty slot (Valid mode
# border pixels with fewer than K candidates); the pad index N marks an
# out-of-image zero-color candidate whose alpha is the constant 0.
ABSENT = -1


@dataclass(frozen=True, eq=False)
class NeighborField:
    """Per-pixel top-K neighbor lists, flattened row-major.

    ``index[i, s]`` is the linear index of the ``s``-th most similar
    candidate of pixel ``i`` (``n_pixels`` for a zero pad, ``ABSENT`` for an
    empty slot); ``distance[i, s]`` its color distance; ``mask[i, s]`` whether
    the slot holds an entry.
    """

    index: np.ndarray
    distance: np.ndarray
    mask: np.ndarray
    shape: tuple[int, int]
    window: int
    padding: Padding
    channels: int

    @property
    def n_pixels(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def pad_index(self) -> int:
        return self.n_pixels

    @property
    def n_terms(self) -> int:
        return int(self.mask.sum())

    def lengths(self) -> np.ndarray:
        return self.mask.sum(axis=1)

    def neighbors_of(self, i: int) -> list[tuple[int, float]]:
        m = self.mask[i]
        return list(zip(self.index[i, m].tolist(), self.distance[i, m].tolist()))

    def mutual_pairs(self) -> np.ndarray:
        """Unordered pairs (i, j), i < j, where each is in the other's list."""
        n = self.n_pixels
        rows = np.repeat(np.arange(n), self.index.shape[1])
        cols = self.index.ravel()
        keep = self.mask.ravel() & (cols >= 0) & (cols < n) & (rows != cols)
        codes = np.unique(rows[keep].astype(np.int64) * n + cols[keep])
        a, b = codes // n, codes % n
        keep = (a < b) & np.isin(b * n + a, codes)
        return np.stack([a[keep], b[keep]], axis=1)


def _window_offsets(K: int) -> tuple[np.ndarray, np.ndarray]:
    r = K // 2
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    return dy.ravel(), dx.ravel()


def _select_rows(img: np.ndarray, K: int, padding: Padding, y0: int, y1: int):
    H, W, C = img.shape
    dy, dx = _window_offsets(K)
    ys = np.arange(y0, y1)[:, None, None] + dy[None, None, :]
    xs = np.arange(W)[None, :, None] + dx[None, None, :]
    ys, xs = np.broadcast_arrays(ys, xs)
    inside = (ys >= 0) & (ys < H) & (xs >= 0) & (xs < W)
    yc = np.clip(ys, 0, H - 1)
    xc = np.clip(xs, 0, W - 1)
    cand = img[yc, xc]  # (rows, W, K*K, C)
    cand[~inside] = 0.0
    center = img[y0:y1, :, None, :]
    dist = np.sqrt(np.sum((center - cand) ** 2, axis=-1))
    lin = yc * W + xc
    if padding is Padding.VALID:
        dist = np.where(inside, dist, np.inf)
        lin = np.where(inside, lin, ABSENT)
    else:
        lin = np.where(inside, lin, H * W)
    # stable sort keeps row-major window scan order among equal distances
    order = np.argsort(dist, axis=-1, kind="stable")[..., :K]
    d = np.take_along_axis(dist, order, axis=-1)
    idx = np.take_along_axis(lin, order, axis=-1)
    mask = np.isfinite(d)
    d = np.where(mask, d, 0.0)
    idx = np.where(mask, idx, ABSENT)
    n = (y1 - y0) * W
    return idx.reshape(n, K), d.reshape(n, K), mask.reshape(n, K)


def build_neighbor_field(
    image: ImagePlane,
    K: int = 11,
    padding: Padding | str = Padding.VALID,
    workers: int = 1,
    chunk_rows: int = 32,
) -> NeighborField:
    """Select the K most similar pixels inside the K x K window of every pixel.

    Rows are processed in fixed chunks; chunk results are concatenated in
    order, so the field is identical for any ``workers``.
    """
    padding = Padding(padding)
    H, W = image.shape
    if K % 2 == 0 or K < 3:
        raise ParameterError(f"window size must be odd and >= 3, got {K}")
    if K > 2 * max(H, W) - 1:
        raise ParameterError(f"window size {K} too large for a {H}x{W} image")
    img = image.data
    bounds = [(y, min(y + chunk_rows, H)) for y in range(0, H, chunk_rows)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _select_rows(img, K, padding, *b), bounds))
    else:
        parts = [_select_rows(img, K, padding, *b) for b in bounds]
    index = np.concatenate([p[0] for p in parts])
    distance = np.concatenate([p[1] for p in parts])
    mask = np.concatenate([p[2] for p in parts])
    for a in (index, distance, mask):
        a.setflags(write=False)
    return NeighborField(index, distance, mask, (H, W), K, padding, image.channels)


def affinity_weights(field: NeighborField, channels: int | None = None) -> np.ndarray:
    """Row-normalized weights ``1 - d / sqrt(C)`` over each selected list.

    Returned as an ``(N, K)`` array aligned with ``field.index``; empty slots
    carry weight 0. Every list holds a zero-distance entry, so row sums are
    at least 1 before normalization.
    """
    c = field.channels if channels is None else channels
    raw = np.where(field.mask, 1.0 - field.distance / np.sqrt(c), 0.0)
    return raw / raw.sum(axis=1, keepdims=True)
