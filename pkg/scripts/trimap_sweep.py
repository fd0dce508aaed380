"""Unknown-band size as the erosion kernel grows, on a soft synthetic matte."""
import argparse

import numpy as np
from scipy import ndimage

from ddcmatte.core import AlphaMatte
from ddcmatte.trimap import ErosionSpec, trimap_from_alpha


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=96)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    blobs = ndimage.gaussian_filter((rng.random((args.size, args.size)) < 0.002).astype(float), 3.0)
    alpha = AlphaMatte(np.clip(blobs / blobs.max() * 4 - 1.0, 0, 1))
    for k in range(1, 32, 2):
        t = trimap_from_alpha(alpha, ErosionSpec(kernel=k))
        print(f"k={k:2d}  unknown {t.n_unknown:5d}  ({t.n_unknown / t.n_pixels:.1%})")


if __name__ == "__main__":
    main()
