"""Command line entry point: ``stula run | validate | plot``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from ..errors import (
    BoxTooSmallError,
    ConfigError,
    DivergenceError,
    MissingMetadataError,
    NumericalFailureError,
    SchemaError,
    StepsizeError,
    StulaError,
)
from .config import load_config, parse_config

OUTPUT_ENV = "STULA_OUTPUT_DIR"

HINTS = {
    StepsizeError: "lower 'lam' to at most lambda_max, or set \"allow_large_step\": true to force the run",
    DivergenceError: "every chain blew up; lower 'lam' or use scheme 'stula'",
    BoxTooSmallError: "widen 'box' (or drop it to use the automatic box)",
    NumericalFailureError: "try a different 'n_cells' or a wider box",
    MissingMetadataError: "this potential lacks a constant the experiment needs; pick another potential or kind",
}


def output_dir(cli_value: str | None) -> Path:
    if cli_value:
        return Path(cli_value)
    env = os.environ.get(OUTPUT_ENV)
    return Path(env) if env else Path.cwd()


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _run(cfg, out: Path) -> int:
    from .experiments import run_experiment

    try:
        rec = run_experiment(cfg, out)
    except StulaError as exc:
        hint = next((h for t, h in HINTS.items() if isinstance(exc, t)), None)
        msg = str(exc) + (f"\nhint: {hint}" if hint else "")
        return _fail(msg, 3)
    print(out / f"{cfg.prefix}.json")
    for f in rec.files.values():
        print(out / f)
    if rec.kind == "validate" and not rec.summary.get("all_pass", False):
        return _fail("one or more checks failed; see the checks table", 4)
    return 0


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _fail(str(exc), 2)
    return _run(cfg, output_dir(args.output_dir))


def cmd_validate(args) -> int:
    try:
        cfg = parse_config({"kind": "validate", "potential": args.potential_id, "seed": args.seed,
                            "n_samples": args.n_samples, "radius": args.radius,
                            "output_prefix": args.prefix or f"validate_{args.potential_id.replace(':', '_')}"})
    except ConfigError as exc:
        return _fail(str(exc), 2)
    return _run(cfg, output_dir(args.output_dir))


def cmd_plot(args) -> int:
    from .plotting import plot_csv

    try:
        path = plot_csv(args.csv, args.kind, args.output)
    except SchemaError as exc:
        return _fail(str(exc), 2)
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stula", description="Tamed Langevin experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--output-dir", help=f"where to write results (default: ${OUTPUT_ENV} or the current directory)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="sampled assumption and drift-inequality checks for a potential")
    v.add_argument("potential_id")
    v.add_argument("--seed", type=int, default=1, help="probe seed (default 1; 0 is rejected)")
    v.add_argument("--n-samples", type=int, default=100000)
    v.add_argument("--radius", type=float, default=10.0)
    v.add_argument("--prefix", help="output file prefix")
    v.add_argument("--output-dir")
    v.set_defaults(func=cmd_validate)

    pl = sub.add_parser("plot", help="render a results CSV as SVG")
    pl.add_argument("csv")
    pl.add_argument("--kind", required=True)
    pl.add_argument("-o", "--output", required=True)
    pl.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
