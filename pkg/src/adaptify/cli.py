"""Command-line entry point.

Subcommands: train, simulate, run, grid, metrics. Exit codes: 0 on
success, 2 for configuration problems, 3 for I/O problems, 4 for
numerical failures.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .errors import (
    AdaptationError,
    CheckpointError,
    ConfigParseError,
    ConfigurationError,
    InvalidInputError,
    ShapeError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptify",
        description="Streaming test-time adaptation: train, simulate, run, sweep, summarize.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seed: bool = True) -> None:
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--out", required=True, help="output directory (created if missing)")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_train = sub.add_parser("train", help="train a classifier offline and write a checkpoint")
    common(p_train)
    p_train.set_defaults(func=harness.cmd_train)

    p_sim = sub.add_parser("simulate", help="generate a drifting labeled stream CSV")
    common(p_sim)
    p_sim.set_defaults(func=harness.cmd_simulate)

    p_run = sub.add_parser("run", help="run adaptation over a stream, write trace and summary")
    common(p_run)
    p_run.add_argument(
        "--baseline",
        choices=("main", "aux", "none"),
        default="none",
        help="also run a frozen single-model baseline over the same frames",
    )
    p_run.add_argument("--warmup", type=int, default=None, help="override warmup frame count")
    p_run.set_defaults(func=harness.cmd_run)

    p_grid = sub.add_parser("grid", help="sweep fusion settings over seeds, write runs and medians")
    common(p_grid, seed=False)
    p_grid.add_argument("--warmup", type=int, default=None, help="override warmup frame count")
    p_grid.set_defaults(func=harness.cmd_grid)

    p_metrics = sub.add_parser("metrics", help="recompute summary metrics from a trace CSV")
    p_metrics.add_argument("trace", help="trace CSV produced by the run or grid command")
    p_metrics.add_argument("--out", default=None, help="also write summary.csv to this directory")
    p_metrics.add_argument("--max-spike-len", type=int, default=5, help="longest run counted as a spike")
    p_metrics.add_argument("--positive-class", type=int, default=1, help="class treated as positive")
    p_metrics.set_defaults(func=harness.cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ConfigParseError, ConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CheckpointError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (AdaptationError, InvalidInputError, ShapeError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
