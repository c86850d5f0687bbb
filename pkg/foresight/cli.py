"""``foresight`` command line.

Exit codes: 0 success, 1 experiment failure (including validation findings), 2 usage or I/O failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from loguru import logger
from pyrsistent import InvariantException, PTypeError

import foresight
from foresight import report, runner
from foresight.config import ConfigError, load_experiment_config
from foresight.indicators import WarmupError, build_feature_table
from foresight.market_data import Finding, MarketDataError, ValidationReport, parse_ohlcv_csv, validate_series

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def configure_logging(level: str):
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="{time:HH:mm:ss} | {level: <8} | {message}")


def _symbol(path, symbol):
    return symbol if symbol else Path(path).stem.upper()


def cmd_validate(args) -> int:
    try:
        series = parse_ohlcv_csv(args.csv, _symbol(args.csv, args.symbol))
    except OSError as error:
        print(f"cannot read {args.csv}: {error}", file=sys.stderr)
        return EXIT_USAGE
    except MarketDataError as error:
        validation = error.report
        if validation is None:
            finding = Finding(row=error.row, rule=error.rule or "parse", message=str(error))
            validation = ValidationReport(errors=[finding])
    else:
        validation = validate_series(series)

    for finding in validation.errors:
        print(f"error {finding}")
    for finding in validation.warnings:
        print(f"warning {finding}")
    print(f"{len(validation.errors)} errors, {len(validation.warnings)} warnings")
    return EXIT_OK if validation.accepted else EXIT_FAILURE


def cmd_featurize(args) -> int:
    symbol = _symbol(args.csv, args.symbol)
    try:
        series = parse_ohlcv_csv(args.csv, symbol)
    except OSError as error:
        print(f"cannot read {args.csv}: {error}", file=sys.stderr)
        return EXIT_USAGE
    try:
        table = build_feature_table(series)
    except (MarketDataError, WarmupError) as error:
        logger.error(str(error))
        return EXIT_FAILURE

    path = report.write_feature_table(table, Path(args.out or ".") / f"{symbol}_features.csv")
    print(path)
    return EXIT_OK


def _experiment_config(args):
    config = load_experiment_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.plots:
        overrides["plots"] = True
    if args.model is not None:
        overrides["models"] = [args.model]
    if args.seq_len is not None:
        overrides["seq_len"] = args.seq_len
    if args.workers is not None:
        overrides["workers"] = args.workers
    try:
        return config.set(**overrides)
    except (InvariantException, PTypeError, ValueError) as error:
        raise ConfigError(f"Invalid command line override: {error}") from None


def _report_manifest(manifest, manifest_file=runner.MANIFEST_FILE) -> int:
    for pair in manifest.failed:
        print(f"failed {pair.symbol}/{pair.model}: {pair.error}")
    print(Path(manifest.config["out"]) / manifest_file)
    return EXIT_FAILURE if manifest.failed else EXIT_OK


def cmd_run(args) -> int:
    return _report_manifest(runner.run_experiment(_experiment_config(args)))


def cmd_sweep(args) -> int:
    return _report_manifest(runner.run_sweep(_experiment_config(args)))


def cmd_explain(args) -> int:
    return _report_manifest(runner.explain_experiment(_experiment_config(args)), runner.EXPLAIN_MANIFEST_FILE)


def _experiment_parser(subparsers, name, handler, help):
    parser = subparsers.add_parser(name, help=help)
    parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, help="seed for initialization, shuffling and attribution sampling")
    parser.add_argument("--plots", action="store_true", help="also write SVG figures")
    parser.add_argument("--model", help="restrict the run to one model kind")
    parser.add_argument("--seq-len", type=int, help="window length for every model")
    parser.add_argument("--workers", type=int, help="pairs to run in parallel")
    parser.set_defaults(handler=handler)
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foresight", description="Stock price forecasting experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {foresight.__version__}")
    parser.add_argument("--log-level", default="INFO", help="loguru level for stderr (default INFO)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    validate = subparsers.add_parser("validate", help="check an OHLCV CSV and list its findings")
    validate.add_argument("csv")
    validate.add_argument("--symbol")
    validate.set_defaults(handler=cmd_validate)

    featurize = subparsers.add_parser("featurize", help="write the indicator feature table of an OHLCV CSV")
    featurize.add_argument("csv")
    featurize.add_argument("--symbol")
    featurize.add_argument("--out", help="output directory")
    featurize.set_defaults(handler=cmd_featurize)

    _experiment_parser(subparsers, "run", cmd_run, "train, evaluate and explain every (symbol, model) pair")
    _experiment_parser(subparsers, "sweep", cmd_sweep, "compare window lengths per (symbol, model) pair")
    _experiment_parser(subparsers, "explain", cmd_explain, "recompute attributions from a previous run")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except (ConfigError, OSError) as error:
        logger.error(str(error))
        return EXIT_USAGE
    except Exception as error:
        logger.exception(f"{args.command} failed: {error}")
        return EXIT_FAILURE


__all__ = ["build_parser", "main"]
