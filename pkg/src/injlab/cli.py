"""Command-line interface.

Heavy imports happen inside main() after the BLAS thread caps are pinned,
so numerical output is byte-stable no matter how many worker threads
INJLAB_THREADS requests.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

_SUBCOMMANDS = [
    "constants",
    "sample-tensor",
    "inj-norm",
    "gme",
    "rmt",
    "kac-rice",
    "audit-covariance",
    "experiment",
]


def _parse_interval(text: str) -> tuple[float, float]:
    try:
        a, b = text.split(":")
        lo = -math.inf if a.strip() in ("-inf", "") else float(a)
        hi = math.inf if b.strip() in ("inf", "") else float(b)
        return lo, hi
    except Exception:
        raise argparse.ArgumentTypeError(f"bad interval {text!r}; expected a:b")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="injlab",
        description="Injective norms of Gaussian random tensors: constants, spectra, "
                    "critical-point bounds.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--p", type=int, default=None)
        sp.add_argument("--d", type=int, default=None)
        sp.add_argument("--field", choices=["real", "complex"], default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--restarts", type=int, default=None)
        sp.add_argument("--interval", type=_parse_interval, default=None, metavar="a:b")
        sp.add_argument("--grid", type=int, default=None)
        sp.add_argument("--samples", type=int, default=None)
        sp.add_argument("--out", choices=["json", "csv"], default=None)
        sp.add_argument("--out-path", default=None)
        sp.add_argument("--config", default=None, help="JSON config file (flags win)")
        sp.add_argument("--figures", default=None, metavar="DIR",
                        help="also render figures into DIR")
        if name == "rmt":
            sp.add_argument("--model", choices=["bhgoe", "tbhgoe"], default=None)
        if name == "experiment":
            sp.add_argument("--name", default=None)
    return parser


_FLAG_TO_FIELD = {
    "p": "p",
    "d": "d",
    "field": "field",
    "seed": "seed",
    "trials": "trials",
    "restarts": "restarts",
    "interval": "interval",
    "grid": "grid",
    "samples": "samples",
    "out": "out_format",
    "out_path": "out_path",
    "model": "model",
    "name": "name",
    "figures": "figures",
}


def _build_config(args: argparse.Namespace):
    from .constants import Field
    from .harness import ExperimentConfig, UsageError

    merged: dict = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                merged.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}")
    for flag, fieldname in _FLAG_TO_FIELD.items():
        val = getattr(args, flag, None)
        if val is not None:
            merged[fieldname] = val

    cfg = ExperimentConfig(subcommand=args.subcommand)
    for key, val in merged.items():
        if not hasattr(cfg, key):
            raise UsageError(f"unknown config key {key!r}")
        if key == "field" and isinstance(val, str):
            val = Field.parse(val)
        if key == "interval" and val is not None:
            val = (float(val[0]), float(val[1]))
        setattr(cfg, key, val)
    cfg.subcommand = args.subcommand
    return cfg


def main(argv=None) -> int:
    # Cap BLAS pools before numpy loads: per-call kernels then round identically
    # whether our own pool runs one task or many.
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, "1")

    parser = build_parser()
    args = parser.parse_args(argv)

    from .harness import UsageError, run

    try:
        cfg = _build_config(args)
        manifest = run(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    summary_bits = [f"{cfg.subcommand}: {manifest.row_count} rows -> {manifest.data_path}"]
    if manifest.figure_paths:
        summary_bits.append(f"figures: {', '.join(manifest.figure_paths)}")
    print("; ".join(summary_bits))
    return 0


if __name__ == "__main__":
    sys.exit(main())
