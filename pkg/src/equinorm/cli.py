"""Command-line entry point: ``gen``, ``measure``, ``spectrum`` and ``sweep``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .io import read_map_dir, write_psd, write_report, write_sweep, write_tensor
from .metrics import GROUPS, measure
from .norm import PRESETS, init_params, preset
from .spectral import aliasing_energy, aliasing_probe, radial_psd
from .synthetic import gen_maps, parse_spectrum
from .transform import upsample2x_sinc
from .verify import theorem_sweep

DEFAULT_DIMS = (8, 16, 32, 32)
DEFAULT_SPECTRUM = "lowpass:0.5"
SHIFT_EQUIVARIANT = ("BatchNorm", "InstanceNorm", "LayerNorm-C", "LayerNorm-AF")


def default_seed() -> int:
    return int(os.environ.get("EQUINORM_SEED", "0"))


def _dims(text: str) -> tuple[int, int, int, int]:
    try:
        dims = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must be B,C,H,W integers, got {text!r}")
    if len(dims) != 4 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"dims must be four positive integers, got {text!r}")
    return dims


def _list(text: str) -> list[str]:
    return [v for v in (s.strip() for s in text.split(",")) if v]


def _spectrum(text: str) -> str:
    try:
        parse_spectrum(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return text


def _layers(text: str, allowed=tuple(PRESETS)) -> list[str]:
    names = list(allowed) if text == "all" else _list(text)
    unknown = [n for n in names if n not in PRESETS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown layers {unknown}; choose from {list(PRESETS)}")
    return names


def _check_choices(values, allowed, what, parser):
    bad = [v for v in values if v not in allowed]
    if bad or not values:
        parser.error(f"invalid {what} {bad or values}; choose from {list(allowed)}")


def _load_maps(args) -> list[np.ndarray]:
    if args.maps is not None:
        maps = read_map_dir(args.maps)
        if not maps:
            raise SystemExit(f"error: no .eqtn or .npy files in {args.maps}")
        return maps
    dims = args.synthetic or DEFAULT_DIMS
    return gen_maps(dims, args.n_maps, args.spectrum, args.seed)


def _add_map_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--maps", type=Path, help="directory of .eqtn/.npy feature maps")
    src.add_argument("--synthetic", type=_dims, metavar="B,C,H,W",
                     help=f"generate synthetic maps of these dims (default {DEFAULT_DIMS})")
    p.add_argument("--n-maps", type=int, default=8, help="number of synthetic maps")
    p.add_argument("--spectrum", type=_spectrum, default=DEFAULT_SPECTRUM,
                   help="synthetic map spectrum: white or lowpass:BW")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="equinorm", description="Equivariance of normalization layers to shifts and translations."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write synthetic feature maps")
    p.add_argument("--dims", type=_dims, default=DEFAULT_DIMS, metavar="B,C,H,W")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--spectrum", type=_spectrum, default="white")
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("measure", help="Monte-Carlo equivariance errors per layer and group")
    p.add_argument("--layers", default="all", help="comma-separated presets or 'all'")
    p.add_argument("--groups", type=_list, default=list(GROUPS))
    _add_map_source(p)
    p.add_argument("--trials", type=int, default=256)
    p.add_argument("--schemes", type=_list, default=["default", "gaussian"])
    p.add_argument("--bn-modes", type=_list, default=["training", "evaluation"])
    p.add_argument("--eval-fraction", type=float, default=0.5,
                   help="probability of evaluation mode when both BatchNorm modes are enabled")
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("spectrum", help="radial PSD of normalized x2-upsampled maps")
    p.add_argument("--layers", default=",".join(SHIFT_EQUIVARIANT))
    _add_map_source(p)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--scheme", choices=["default", "gaussian"], default="gaussian")
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("sweep", help="classify every (center, scale, affine) configuration")
    p.add_argument("--dims", type=_dims, default=(2, 3, 8, 8), metavar="B,C,H,W")
    p.add_argument("--t-lo", type=float, default=1e-8)
    p.add_argument("--t-hi", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--out", type=Path, required=True)
    return parser


def cmd_gen(args) -> int:
    if args.n < 0:
        raise SystemExit("error: --n must be nonnegative")
    maps = gen_maps(args.dims, args.n, args.spectrum, args.seed)
    if maps:
        args.out.mkdir(parents=True, exist_ok=True)
    for i, x in enumerate(maps):
        write_tensor(x, args.out / f"map_{i:05d}.eqtn")
    print(f"wrote {len(maps)} maps to {args.out}")
    return 0


def cmd_measure(args, parser) -> int:
    try:
        layers = _layers(args.layers)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    _check_choices(args.groups, GROUPS, "groups", parser)
    _check_choices(args.schemes, ("default", "gaussian"), "schemes", parser)
    _check_choices(args.bn_modes, ("training", "evaluation"), "bn-modes", parser)
    if args.trials < 1:
        parser.error("--trials must be >= 1")

    maps = _load_maps(args)
    report = measure(
        [preset(n) for n in layers], maps, args.groups, args.trials, seed=args.seed,
        schemes=tuple(args.schemes), bn_modes=tuple(args.bn_modes),
        eval_fraction=args.eval_fraction,
    )
    meta = {
        "seed": args.seed, "dims": list(maps[0].shape), "n_maps": len(maps),
        "trials": args.trials, "schemes": args.schemes, "bn_modes": args.bn_modes,
        "eval_fraction": args.eval_fraction,
        "source": str(args.maps) if args.maps else f"synthetic:{args.spectrum}",
    }
    write_report(report, args.out, meta)
    for c in report.cells:
        print(f"{c.layer:<14} {c.group:<12} {c.mean:.3e} ± {c.stderr:.2e}  (n={c.n})")
    return 0


def cmd_spectrum(args, parser) -> int:
    try:
        layers = _layers(args.layers, SHIFT_EQUIVARIANT)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    if args.bins < 2:
        parser.error("--bins must be >= 2")
    maps = _load_maps(args)
    up_dims = (*maps[0].shape[:2], 2 * maps[0].shape[2], 2 * maps[0].shape[3])

    upsampled = radial_psd([upsample2x_sinc(x) for x in maps], args.bins)
    psds = {"Input": upsampled}
    ratios = {"Input": aliasing_energy(upsampled) / upsampled.total_energy}
    for i, name in enumerate(layers):
        cfg = preset(name)
        params = init_params(cfg, up_dims, args.scheme, np.random.default_rng([args.seed, i]))
        result = aliasing_probe(cfg, params, maps, args.bins)
        psds[name] = result.psd
        ratios[name] = result.ratio

    meta = {
        "seed": args.seed, "dims": list(maps[0].shape), "bins": args.bins,
        "scheme": args.scheme, "aliasing_ratio": ratios,
        "source": str(args.maps) if args.maps else f"synthetic:{args.spectrum}",
    }
    write_psd(psds, args.out, meta)
    for name, ratio in ratios.items():
        print(f"{name:<14} aliasing-band energy ratio {ratio:.3e}")
    return 0


def cmd_sweep(args, parser) -> int:
    if not args.t_lo < args.t_hi:
        parser.error("--t-lo must be smaller than --t-hi")
    rows = theorem_sweep(args.dims, args.seed, args.t_lo, args.t_hi)
    meta = {"seed": args.seed, "dims": list(args.dims), "t_lo": args.t_lo, "t_hi": args.t_hi}
    write_sweep(rows, args.out, meta)
    indeterminate = sum(r.measured is None for r in rows)
    disagree = sum(not r.agreement for r in rows)
    print(f"{len(rows)} configurations, {disagree} disagreements, {indeterminate} indeterminate")
    return 1 if disagree else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen":
        return cmd_gen(args)
    if args.command == "measure":
        return cmd_measure(args, parser)
    if args.command == "spectrum":
        return cmd_spectrum(args, parser)
    return cmd_sweep(args, parser)


if __name__ == "__main__":
    sys.exit(main())
