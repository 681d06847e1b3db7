"""Command-line driver: ``signaltrader <stage> --config run.yaml``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .config import load_config
from .errors import SignalTraderError

STAGES = {
    "analyze": pipeline.analyze,
    "design": pipeline.design,
    "backtest": pipeline.backtest,
    "report": pipeline.report,
    "sentiment": pipeline.sentiment,
    "run": pipeline.run_all,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signaltrader", description="Signal analysis and trading strategy pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "analyze": "stationarity, VAR fit, bootstrapped IRFs and screening over the analysis period",
        "design": "turn screened signals into strategy specs",
        "backtest": "run strategies, benchmarks and random traders over the leave-out period",
        "report": "bundle stage outputs into report.md / report.json",
        "sentiment": "bin a text corpus into tweets, valence and polarization signals",
        "run": "analyze, design, backtest and report in sequence",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, metavar="PATH", help="YAML run config")
        p.add_argument("--seed", type=int, metavar="N", help="override the master seed")
        p.add_argument("--out", metavar="DIR", help="override the output directory")
        p.add_argument("--threads", type=int, metavar="N", help="worker threads for resampling stages")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = load_config(
            args.config, seed=args.seed, out=args.out, threads=args.threads, need_panel=args.command != "sentiment"
        )
        STAGES[args.command](config)
    except SignalTraderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
