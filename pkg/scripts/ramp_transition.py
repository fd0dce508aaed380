"""Smooth-transition check on a linear ramp, with the exact LP optimum for reference.

The known + DDC objective is piecewise linear, so its global minimum is a
linear program; comparing against it shows how far the subgradient solver
is from optimal.
"""
import argparse

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ddcmatte.analysis import SceneSpec, make_scene, transition_pair_fraction
from ddcmatte.losses import total_loss
from ddcmatte.metrics import pixel_metrics
from ddcmatte.neighbors import build_neighbor_field
from ddcmatte.solver import SolverConfig, solve


def lp_optimum(trimap, field, lam):
    n = trimap.n_pixels
    sel = field.mask.ravel()
    rows = np.repeat(np.arange(n), field.index.shape[1])[sel]
    cols = field.index.ravel()[sel]
    d = field.distance.ravel()[sel]
    m = rows.size
    kn = np.flatnonzero(trimap.known.ravel())
    t = trimap.labels.ravel()[kn]
    nk = kn.size
    c = np.concatenate([np.zeros(n), np.full(nk, 1 / nk), np.full(m, lam / m)])
    S = sparse.identity(n, format="csr")[kn]
    D = sparse.csr_matrix((np.ones(m), (np.arange(m), rows)), (m, n)) - sparse.csr_matrix(
        (np.ones(m), (np.arange(m), cols)), (m, n)
    )
    zk, zm = sparse.csr_matrix((nk, m)), sparse.csr_matrix((m, nk))
    A = sparse.vstack([
        sparse.hstack([S, -sparse.identity(nk), zk]),
        sparse.hstack([-S, -sparse.identity(nk), zk]),
        sparse.hstack([D, zm, -sparse.identity(m)]),
        sparse.hstack([-D, zm, -sparse.identity(m)]),
    ])
    b = np.concatenate([t, -t, d, -d])
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(0, 1)] * n + [(0, None)] * (nk + m), method="highs")
    return res.fun, res.x[:n].reshape(trimap.shape)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ramp-width", type=int, default=6)
    ap.add_argument("--windows", type=int, nargs="+", default=[3, 5, 7, 11])
    args = ap.parse_args()
    image, gt, trimap = make_scene(SceneSpec("ramp", ramp_width=args.ramp_width))
    print("K   solver      LP-opt      ground-truth  pairs-ok  SAD")
    for K in args.windows:
        cfg = SolverConfig(window=K)
        field = build_neighbor_field(image, K)
        alpha, _ = solve(image, trimap, cfg)
        best, _ = lp_optimum(trimap, field, cfg.lam)
        frac, n = transition_pair_fraction(image, alpha, field, trimap)
        print(f"{K:<3d} {total_loss(alpha, trimap, field, cfg.lam).value:.6f}  {best:.6f}  "
              f"{total_loss(gt, trimap, field, cfg.lam).value:.6f}      {frac:.3f}/{n:<4d} "
              f"{pixel_metrics(alpha, gt)['sad']:.5f}")
    print("middle row, last K:", np.round(alpha.data[image.height // 2], 2))


if __name__ == "__main__":
    main()
