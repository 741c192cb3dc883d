"""Command-line entry point: ``vortexqc <experiment> --config PATH``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import EXPERIMENTS, ConfigError, load_config, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vortexqc", description="Seeded vortex-qubit experiments.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, type=Path, help="key=value config file")
    parser.add_argument("--seed", type=int, help="override [run] seed")
    parser.add_argument("--trials", type=int, help="override [run] trials")
    parser.add_argument("--out", type=Path, help="report path (default: [run] out, else stdout only)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
    except (OSError, ConfigError) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return 2
    if config.experiment != args.experiment:
        print(f"{args.config}: config is for {config.experiment!r}, not {args.experiment!r}", file=sys.stderr)
        return 2
    if args.seed is not None:
        if not 0 <= args.seed <= 2**64 - 1:
            print("--seed must be a 64-bit unsigned integer", file=sys.stderr)
            return 2
        config.seed = args.seed
    if args.trials is not None:
        if args.trials <= 0:
            print("--trials must be positive", file=sys.stderr)
            return 2
        config.trials = args.trials
    report = run(config)
    out = args.out or (Path(config.out) if config.out else None)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(report.render())
    print(report.summary())
    if not report.passed:
        print("failing checks: " + ", ".join(report.failures), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
