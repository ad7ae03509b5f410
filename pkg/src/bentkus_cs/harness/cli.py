"""Command-line entry point: ``bentkus-cs <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import sys

from ..errors import DomainError, NumericError
from .config import ConfigError, ExperimentConfig, apply_overrides, load_config
from .experiments import run, write_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SUBCOMMANDS = ("coverage", "stopping", "bestarm", "bound-table", "sweep")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bentkus-cs",
        description="Confidence-sequence experiments for bounded observations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path (stdout when omitted)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--reps", type=int, dest="replications")
        p.add_argument("--horizon", type=int)
        p.add_argument("--delta", type=float)
        p.add_argument("--methods", help="comma-separated method names")
        p.add_argument("--workers", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        methods = None
        if args.methods is not None:
            methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        cfg = apply_overrides(
            cfg, kind=args.command, seed=args.seed, out=args.out, format=args.format,
            replications=args.replications, horizon=args.horizon, delta=args.delta,
            methods=methods, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run(cfg)
        text = write_report(report, cfg, cfg.out, cfg.format)
    except (DomainError, NumericError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if cfg.out is None:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
