"""Command line entry point: ``zo-goldstein {run,validate,sweep,concentration}``."""

from __future__ import annotations

import argparse
import logging
import sys

from zo_goldstein.config import TRACE_LEVELS, ExperimentConfig, from_mapping, load_config, parse_value
from zo_goldstein.errors import ConfigurationError, UsageError
from zo_goldstein.harness import run_experiment

SUBCOMMAND_MODES = {"run": "run", "validate": "validated", "sweep": "sweep", "concentration": "concentration"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zo-goldstein", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMAND_MODES:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat 'section.key = value' config file")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", help="output directory for summary.csv and friends")
        p.add_argument("--trace", choices=TRACE_LEVELS, help="per-iteration JSONL trace level")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args) -> ExperimentConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = parse_value(value)
    overrides["run.mode"] = SUBCOMMAND_MODES[args.command]
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.out is not None:
        overrides["output.dir"] = args.out
    if args.trace is not None:
        overrides["output.trace"] = args.trace
    if args.config:
        return load_config(args.config, overrides)
    return from_mapping(overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        report = run_experiment(cfg)
    except (ConfigurationError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.out:
        for path in report.write(cfg.out):
            print(path)
    else:
        for row in report.rows:
            print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
