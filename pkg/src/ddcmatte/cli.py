"""Command-line interface: solve, trimap, eval, analyze, gradcheck.

Exit codes: 0 success, 1 usage / I/O / parameter error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from PIL import Image

from .analysis import (
    HairSequence,
    SceneSpec,
    braking_residual,
    make_scene,
    pair_bound_check,
    symmetry_check,
)
from .core import (
    AlphaMatte,
    BACKGROUND,
    DegenerateInputError,
    FOREGROUND,
    ImagePlane,
    ParameterError,
    Trimap,
    UNKNOWN,
    check_same_shape,
    quantize_alpha,
)
from .losses import KnownLossSpec, LabelMode, Normalization, Penalty, Policy, check_gradient, loss_probe
from .metrics import evaluate
from .neighbors import Padding, build_neighbor_field
from .solver import NumericalFailure, SolverConfig, solve
from .trimap import ErosionSpec, trimap_from_alpha

log = logging.getLogger("ddcmatte")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
GRADCHECK_TOL = 1e-4
TRIMAP_BYTES = {0: BACKGROUND, 128: UNKNOWN, 255: FOREGROUND}
LOSSES = ("known", "affinity", "dc", "ddc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for numerical failure here
    def error(self, message):
        raise UsageError(message)


def threads() -> int:
    raw = os.environ.get("MATTE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"MATTE_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("MATTE_THREADS must be >= 1")
    return n


# -- PNG I/O --------------------------------------------------------------


def _open(path: Path) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    return img


def _scale(img: Image.Image) -> tuple[np.ndarray, float]:
    if img.mode.startswith("I"):
        return np.asarray(img, dtype=np.float64), 65535.0
    return np.asarray(img, dtype=np.float64), 255.0


def read_image(path: Path) -> ImagePlane:
    img = _open(path)
    if img.mode not in ("L", "RGB"):
        img = img.convert("L" if img.mode in ("1", "LA") else "RGB")
    return ImagePlane(np.asarray(img, dtype=np.float64) / 255.0)


def read_alpha(path: Path) -> AlphaMatte:
    img = _open(path)
    if img.mode not in ("L",) and not img.mode.startswith("I"):
        img = img.convert("L")
    data, top = _scale(img)
    return AlphaMatte(np.clip(data / top, 0.0, 1.0))


def read_trimap(path: Path) -> Trimap:
    img = _open(path)
    if img.mode != "L":
        raise UsageError(f"{path}: trimap must be an 8-bit grayscale PNG, got mode {img.mode}")
    raw = np.asarray(img)
    bad = ~np.isin(raw, list(TRIMAP_BYTES))
    if bad.any():
        vals = sorted(set(np.unique(raw[bad]).tolist()))[:5]
        raise UsageError(f"{path}: trimap bytes must be 0/128/255, found {vals}")
    labels = np.where(raw == 255, FOREGROUND, np.where(raw == 128, UNKNOWN, BACKGROUND))
    return Trimap(labels)


def trimap_bytes(trimap: Trimap) -> np.ndarray:
    lab = trimap.labels
    return np.where(lab == FOREGROUND, 255, np.where(lab == UNKNOWN, 128, 0)).astype(np.uint8)


def _atomic_write(path: Path, write) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_png(path: Path, array: np.ndarray) -> None:
    img = Image.fromarray(array)
    _atomic_write(path, lambda tmp: img.save(tmp, format="PNG"))


def write_alpha(path: Path, alpha: AlphaMatte, deep: bool = False) -> None:
    write_png(path, quantize_alpha(alpha, 16 if deep else 8))


def write_image(path: Path, image: ImagePlane) -> None:
    q = quantize_alpha(image.data, 8)
    write_png(path, q[:, :, 0] if image.channels == 1 else q)


def write_json(path: Path, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)

    def _w(tmp):
        with open(tmp, "w") as fh:
            fh.write(text + "\n")

    _atomic_write(path, _w)


# -- config file ----------------------------------------------------------


def read_config(path: Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    out = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def apply_config(parser: argparse.ArgumentParser, config: dict[str, str]) -> None:
    """Install config values as parser defaults, so explicit flags still win."""
    actions = {a.dest: a for a in parser._actions if a.option_strings and a.dest not in ("help", "config")}
    defaults = {}
    for key, raw in config.items():
        act = actions.get(key)
        if act is None:
            raise UsageError(f"unknown config key {key!r}")
        if act.nargs == 0:  # store_true
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            continue
        conv = act.type or str
        try:
            value = [conv(p) for p in raw.split()] if act.nargs not in (None, "?") else conv(raw)
        except (TypeError, ValueError):
            raise UsageError(f"bad value for config key {key!r}: {raw!r}") from None
        if act.choices is not None and value not in act.choices:
            raise UsageError(f"config key {key!r} must be one of {list(act.choices)}")
        defaults[key] = value
    parser.set_defaults(**defaults)


# -- commands -------------------------------------------------------------


def solver_config(args) -> SolverConfig:
    return SolverConfig(
        window=args.window,
        lam=args.lam,
        step_size=args.step_size,
        momentum=args.momentum,
        max_iters=args.max_iters,
        convergence_tol=args.tol,
        trace_every=args.trace_every,
        padding=args.padding,
        normalization=args.normalization,
        known=KnownLossSpec(Penalty(args.penalty), LabelMode(args.label_mode)),
        seed=args.seed,
        workers=threads(),
    )


def _solve_one(image_path: Path, trimap_path: Path, out: Path, trace_path: Path | None, args, config) -> int:
    image = read_image(image_path)
    trimap = read_trimap(trimap_path)
    try:
        check_same_shape(image.shape, trimap.shape)
    except ParameterError as exc:
        raise UsageError(f"{image_path} vs {trimap_path}: {exc}") from None
    try:
        alpha, trace = solve(image, trimap, config, Policy(args.policy))
    except NumericalFailure as exc:
        print(f"error: {image_path}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_alpha(out, alpha, args.deep)
    if trace_path is not None:
        report = trace.to_dict()
        report["policy"] = args.policy
        report["image"] = str(image_path)
        write_json(trace_path, report)
    return EXIT_OK


def cmd_solve(args) -> int:
    config = solver_config(args)
    if args.dir is None:
        if args.image is None or args.trimap is None or args.out is None:
            raise UsageError("solve needs IMAGE TRIMAP -o OUT, or --dir with --out-dir")
        return _solve_one(Path(args.image), Path(args.trimap), Path(args.out),
                          Path(args.trace) if args.trace else None, args, config)
    root = Path(args.dir)
    out_dir = Path(args.out_dir or root / "alpha")
    names = sorted(p.name for p in (root / "image").glob("*.png"))
    if not names:
        raise UsageError(f"no PNG files in {root / 'image'}")
    for name in names:
        if not (root / "trimap" / name).is_file():
            raise UsageError(f"missing trimap {root / 'trimap' / name}")
    # each solve runs single-threaded inside; files fan out to the pool
    per_file = replace(config, workers=1)

    def job(name):
        trace = Path(args.trace_dir or out_dir) / (Path(name).stem + ".json")
        return _solve_one(root / "image" / name, root / "trimap" / name, out_dir / name, trace, args, per_file)

    with ThreadPoolExecutor(max_workers=threads()) as pool:
        codes = list(pool.map(job, names))
    return max(codes)


def cmd_trimap(args) -> int:
    if args.kernel is None and args.kernel_range is None:
        raise UsageError("give --kernel or --kernel-range")
    spec = ErosionSpec(
        kernel=args.kernel,
        kernel_range=tuple(args.kernel_range) if args.kernel_range else None,
        delta=args.delta,
        seed=args.seed,
    )
    alpha = read_alpha(Path(args.alpha))
    trimap = trimap_from_alpha(alpha, spec, np.random.default_rng(args.seed))
    write_png(Path(args.out), trimap_bytes(trimap))
    return EXIT_OK


def cmd_eval(args) -> int:
    pred = read_alpha(Path(args.pred))
    gt = read_alpha(Path(args.gt))
    trimap = read_trimap(Path(args.trimap))
    try:
        report = evaluate(pred, gt, trimap)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    print(report.to_json())
    return EXIT_OK


def _random_instance(rng: np.random.Generator, size: int, channels: int = 3):
    image = ImagePlane(rng.random((size, size, channels)))
    labels = rng.choice([BACKGROUND, UNKNOWN, FOREGROUND], size=(size, size))
    alpha = rng.random((size, size))
    return image, Trimap(labels), alpha


def cmd_analyze(args) -> int:
    if args.mode == "braking":
        coeffs = {"linear": [0.0, 1.0], "quadratic": [0.3, -0.7, 0.05], "cubic": [0.0, 0.4, -0.09, 0.004]}
        seq = HairSequence.from_polynomial(coeffs[args.form], args.length, args.K)
        rep = braking_residual(seq)
        print(f"form: {args.form}  K: {args.K}  length: {args.length}")
        print(" t   recursion_residual")
        for t, r in zip(range(args.K + 1, args.length + 1), rep.recursion):
            print(f"{t:3d}  {r: .3e}")
        print(f"max |residual|: {rep.max_abs:.3e}")
        print(f"recursion vs window-mean disagreement: {rep.max_disagreement:.3e}")
    elif args.mode == "bounds":
        rng = np.random.default_rng(args.seed)
        violations = pairs = 0
        worst = float("inf")
        for _ in range(args.instances):
            image = ImagePlane(rng.random((args.size, args.size, 3)))
            field = build_neighbor_field(image, args.K, Padding.VALID)
            rep = pair_bound_check(image, rng.random((args.size, args.size)), field)
            violations += rep.violations
            pairs += rep.mutual_pairs
            worst = min(worst, rep.worst_slack)
        print(f"instances: {args.instances}  K: {args.K}  mutual pairs: {pairs}")
        print(f"worst slack: {worst:.3e}")
        print(f"violations: {violations}")
        if violations:
            return EXIT_NUMERIC
    elif args.mode == "symmetry":
        print(f"max asymmetry: {symmetry_check(args.K, args.slope, args.offset):.3e}")
    else:
        spec = SceneSpec(
            kind=args.kind,
            height=args.canvas[0],
            width=args.canvas[1],
            ramp_width=args.width,
            hair_length=args.length,
            amplitude=args.amplitude,
            margin=args.margin,
        )
        image, gt, trimap = make_scene(spec)
        out = Path(args.out_dir)
        write_image(out / "image.png", image)
        write_alpha(out / "alpha.png", gt)
        write_png(out / "trimap.png", trimap_bytes(trimap))
        print(f"wrote {out / 'image.png'}, {out / 'alpha.png'}, {out / 'trimap.png'}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    names = LOSSES if args.loss == "all" else (args.loss,)
    rng = np.random.default_rng(args.seed)
    worst_all = 0.0
    for name in names:
        worst, skipped, checked = 0.0, 0, 0
        for _ in range(args.instances):
            image, trimap, alpha = _random_instance(rng, args.size)
            field = build_neighbor_field(image, args.K, args.padding)
            fn, kinks = loss_probe(name, trimap, field, Normalization(args.normalization))
            rep = check_gradient(fn, alpha, args.h, kinks)
            worst = max(worst, rep.max_rel_error)
            skipped += rep.skipped
            checked += rep.checked
        worst_all = max(worst_all, worst)
        print(f"{name}: max relative error {worst:.3e}  checked {checked}  skipped kinks {skipped}")
    return EXIT_OK if worst_all < GRADCHECK_TOL else EXIT_NUMERIC


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ddcmatte", description="Per-image alpha matting with distance-consistency priors.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="estimate an alpha matte from an image and a trimap")
    s.add_argument("image", nargs="?")
    s.add_argument("trimap", nargs="?")
    s.add_argument("-o", "--out")
    s.add_argument("--trace", help="JSON trace path")
    s.add_argument("--dir", help="batch root holding image/ and trimap/ with matching PNG names")
    s.add_argument("--out-dir")
    s.add_argument("--trace-dir")
    s.add_argument("--deep", action="store_true", help="write 16-bit alpha")
    s.add_argument("--config", help="key=value file; flags override it")
    s.add_argument("--policy", choices=[x.value for x in Policy], default=Policy.DDC.value)
    s.add_argument("--window", type=int, default=SolverConfig.window)
    s.add_argument("--lam", type=float, default=SolverConfig.lam)
    s.add_argument("--step-size", type=float, default=SolverConfig.step_size)
    s.add_argument("--momentum", type=float, default=SolverConfig.momentum)
    s.add_argument("--max-iters", type=int, default=SolverConfig.max_iters)
    s.add_argument("--tol", type=float, default=SolverConfig.convergence_tol)
    s.add_argument("--trace-every", type=int, default=SolverConfig.trace_every)
    s.add_argument("--padding", choices=[x.value for x in Padding], default=Padding.VALID.value)
    s.add_argument("--normalization", choices=[x.value for x in Normalization], default=Normalization.REFERENCE.value)
    s.add_argument("--penalty", choices=[x.value for x in Penalty], default=Penalty.L1.value)
    s.add_argument("--label-mode", choices=[x.value for x in LabelMode], default=LabelMode.TRIMAP.value)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("trimap", help="synthesize a trimap by eroding an alpha matte")
    t.add_argument("alpha")
    t.add_argument("-o", "--out", required=True)
    k = t.add_mutually_exclusive_group()
    k.add_argument("--kernel", type=int)
    k.add_argument("--kernel-range", type=int, nargs=2, metavar=("LO", "HI"))
    t.add_argument("--delta", type=float, default=1.0 / 255.0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--config")
    t.set_defaults(func=cmd_trimap)

    e = sub.add_parser("eval", help="print matting metrics as JSON")
    e.add_argument("pred")
    e.add_argument("gt")
    e.add_argument("trimap")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("analyze", help="analytical checks and synthetic scenes")
    a.add_argument("mode", choices=["braking", "bounds", "symmetry", "synth"])
    a.add_argument("--K", type=int, default=5)
    a.add_argument("--form", choices=["linear", "quadratic", "cubic"], default="quadratic")
    a.add_argument("--length", type=int, default=20, help="sequence or hair length")
    a.add_argument("--instances", type=int, default=100)
    a.add_argument("--size", type=int, default=8)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--slope", type=float, default=0.02)
    a.add_argument("--offset", type=float, default=0.1)
    a.add_argument("--kind", choices=["ramp", "hair", "texture"], default="ramp")
    a.add_argument("--width", type=int, default=6, help="ramp width")
    a.add_argument("--canvas", type=int, nargs=2, metavar=("H", "W"), default=None)
    a.add_argument("--amplitude", type=float, default=0.1)
    a.add_argument("--margin", type=int, default=2)
    a.add_argument("--out-dir", default=".")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("gradcheck", help="compare loss gradients with central differences")
    g.add_argument("--loss", choices=[*LOSSES, "all"], default="all")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--size", type=int, default=8)
    g.add_argument("--instances", type=int, default=1)
    g.add_argument("--K", type=int, default=3)
    g.add_argument("--h", type=float, default=1e-5)
    g.add_argument("--padding", choices=[x.value for x in Padding], default=Padding.VALID.value)
    g.add_argument("--normalization", choices=[x.value for x in Normalization], default=Normalization.REFERENCE.value)
    g.set_defaults(func=cmd_gradcheck)
    return p


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices[name]
    raise KeyError(name)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
        if getattr(args, "config", None):
            apply_config(_subparser(parser, args.command), read_config(Path(args.config)))
            args = parser.parse_args(argv)
        if args.command == "analyze" and args.canvas is None:
            args.canvas = (16, 32) if args.kind == "hair" else (16, 16)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, DegenerateInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
