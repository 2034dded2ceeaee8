"""Command-line entry point.

    saber run <config.toml>            run an experiment, write artifacts
    saber report <dir> --format md     render the strategy x metric table
    saber validate-data <config.toml>  schema and bias checks on the data

Exit codes: 0 success, 2 config/validation error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import _kernels
from .adapter import AdapterStrategy
from .analytics import RegimeLabel, label_regime
from .config import ExperimentConfig, load_config
from .errors import (
    ConfigError,
    DataError,
    MissingArtifacts,
    NoDataForYear,
    SaberError,
)
from .market_data import (
    MarketDataStore,
    load_membership_csv,
    load_price_csv,
    load_prices_dir,
    load_texts_jsonl,
)
from .pipeline import aggregate, generate_windows, run_composite, run_selected
from .reporting import (
    file_fingerprints,
    load_summary,
    render_summary,
    write_artifacts,
)
from .strategies.timing import build_strategy

logger = logging.getLogger(__name__)


def _load_store(config: ExperimentConfig) -> MarketDataStore:
    store = load_prices_dir(config.prices_dir)
    if config.benchmark not in store.symbols:
        raise DataError(f"benchmark symbol {config.benchmark!r} has no price file")
    if config.texts_path:
        store.add_texts(load_texts_jsonl(config.texts_path))
    return store


def _strategy_factories(config: ExperimentConfig, calendar):
    factories = {}
    for name, params in config.strategies.items():
        factories[name] = (
            lambda name=name, params=params: build_strategy(name, params, calendar)
        )
    for name, params in config.adapters.items():
        factories[f"adapter_{name}"] = (
            lambda name=name, params=params: AdapterStrategy(
                command=params["command"],
                name=f"adapter_{name}",
                timeout=float(params.get("timeout", 120.0)),
                bars_window=int(params.get("bars_window", 30)),
                send_texts=bool(params.get("send_texts", False)),
            )
        )
    return factories


def _regime_labels(benchmark_series, windows) -> dict[int, RegimeLabel]:
    labels: dict[int, RegimeLabel] = {}
    for window in windows:
        year = window.final_year
        if year in labels:
            continue
        try:
            labels[year] = label_regime(benchmark_series, year)
        except NoDataForYear:
            logger.warning("benchmark has no bars in %d; regime unlabelled", year)
    return labels


def cmd_run(args) -> int:
    config = load_config(args.config)
    jobs = args.jobs if args.jobs is not None else config.jobs
    if jobs <= 0:
        jobs = os.cpu_count() or 1
    store = _load_store(config)
    benchmark_series = store.series(config.benchmark)
    calendar = benchmark_series.dates
    factories = _strategy_factories(config, calendar)
    windows = generate_windows(config.window)

    selection_info = None
    if config.mode == "composite":
        universe = load_membership_csv(config.membership_path)
        results, selection_info = run_composite(
            store, universe, config.selection, config.window,
            factories, config.execution, jobs=jobs,
        )
    else:
        results = run_selected(
            store, config.symbols, config.window, factories,
            config.execution, jobs=jobs,
        )

    regimes = _regime_labels(benchmark_series, windows)
    aggregates = {}
    for name, wrs in results.items():
        try:
            aggregates[name] = aggregate(wrs, regimes)
        except SaberError as exc:
            logger.warning("strategy %s produced no usable windows: %s", name, exc)
    manifest = {
        "config_file": config.config_path.name,
        "config": config.raw,
        "seed": config.seed,
        "mode": config.mode,
        "kernel_backend": _kernels.KERNEL_BACKEND,
        "strategies": sorted(factories),
        "windows": [w.to_dict() for w in windows],
        "data_fingerprints": file_fingerprints(config.data_files),
    }
    write_artifacts(
        config.output_dir,
        manifest,
        results,
        aggregates,
        regimes,
        benchmark_series,
        config.execution.risk_free_rate_annual,
        selection_info=selection_info,
        pairing=config.t_test_pairing,
    )
    print(f"artifacts written to {config.output_dir}")
    return 0


def cmd_report(args) -> int:
    summary = load_summary(Path(args.artifact_dir))
    sys.stdout.write(render_summary(summary, args.format))
    return 0


def cmd_validate_data(args) -> int:
    config = load_config(args.config)
    warnings: list[str] = []
    failures: list[str] = []
    for path in sorted(config.prices_dir.glob("*.csv")):
        try:
            load_price_csv(path)
        except SaberError as exc:
            failures.append(f"{path.name}: {type(exc).__name__}: {exc}")
    if config.membership_path:
        try:
            universe = load_membership_csv(config.membership_path)
            if not any(iv.delisted for iv in universe.intervals):
                warnings.append(
                    "membership file contains no delisted intervals: the universe "
                    "may be survivorship-biased"
                )
        except SaberError as exc:
            failures.append(f"{config.membership_path.name}: {type(exc).__name__}: {exc}")
    elif config.mode == "composite":
        failures.append("composite mode requires a membership file")
    if config.window.step_years < config.window.window_len_years:
        warnings.append(
            "step_years < window_len_years: evaluation windows overlap, so the "
            "same data is evaluated repeatedly (data-snooping risk)"
        )
    for line in warnings:
        print(f"WARNING: {line}")
    for line in failures:
        print(f"FAILURE: {line}")
    if not warnings and not failures:
        print("ok: no warnings")
    return 2 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="saber")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a TOML config")
    p_run.add_argument("config")
    p_run.add_argument("--jobs", type=int, default=None,
                       help="parallel cells (default: config value or CPU count)")
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("report", help="render tables from a run's artifacts")
    p_rep.add_argument("artifact_dir")
    p_rep.add_argument("--format", choices=("json", "csv", "markdown"),
                       default="markdown")
    p_rep.set_defaults(func=cmd_report)

    p_val = sub.add_parser("validate-data", help="schema and bias checks")
    p_val.add_argument("config")
    p_val.set_defaults(func=cmd_validate_data)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MissingArtifacts as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SaberError as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
