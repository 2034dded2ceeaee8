"""Run artifacts: manifest with data fingerprints, per-cell records, window
tables, pooled summaries, significance matrix, CAPM table, and plot-ready
CSVs (regime x strategy mean Sharpe, per-cell underwater curves).

Everything written here is deterministic for a given (config, data, seed):
keys are sorted, floats use their shortest round-trip repr, and no
timestamps are embedded.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
from pathlib import Path

import numpy as np

from . import _kernels
from .analytics import (
    BEAR,
    BULL,
    SIDEWAYS,
    RegimeLabel,
    capm_fit,
    paired_t_test,
    underwater_series,
)
from .engine import BacktestRecord
from .errors import (
    DegenerateRegressor,
    MissingArtifacts,
    SaberError,
    TooFewObservations,
    ZeroVarianceDifferences,
)
from .market_data import PriceSeries
from .pipeline import AggregateResult, WindowResult

METRIC_COLUMNS = ("sharpe", "sortino", "annualized_return", "cumulative_return",
                  "max_drawdown", "annualized_volatility")
METRIC_HEADERS = ("SPR", "STR", "AR", "CR", "MDD", "AV")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (dt.date, dt.datetime)):
        return obj.isoformat()
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def file_fingerprints(paths: list[Path]) -> dict[str, str]:
    out = {}
    for p in sorted(paths):
        out[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


def _cell_key(wr: WindowResult, symbol: str) -> tuple[str, str]:
    return (wr.window.label, symbol)


def t_test_matrix(
    results: dict[str, list[WindowResult]],
    pairing: str = "window_symbol",
) -> dict:
    """Pairwise paired t-tests on cumulative returns.

    ``window_symbol`` pairs per-(window, symbol) cells common to both
    strategies; ``window_mean`` pairs per-window averaged values.
    """
    values: dict[str, dict] = {}
    for name, wrs in results.items():
        if pairing == "window_mean":
            values[name] = {
                wr.window.label: wr.averaged.cumulative_return
                for wr in wrs
                if wr.averaged is not None
            }
        else:
            values[name] = {
                _cell_key(wr, sym): rec.cumulative_return
                for wr in wrs
                for sym, (rec, _) in wr.per_symbol.items()
            }
    names = sorted(results)
    matrix: dict[str, dict] = {}
    for a in names:
        matrix[a] = {}
        for b in names:
            if a == b:
                continue
            common = sorted(set(values[a]) & set(values[b]))
            if len(common) < 2:
                matrix[a][b] = {"error": "fewer than 2 common cells"}
                continue
            try:
                res = paired_t_test(
                    [values[a][k] for k in common],
                    [values[b][k] for k in common],
                )
                matrix[a][b] = {**res.to_dict(), "n": len(common)}
            except (ZeroVarianceDifferences, TooFewObservations) as exc:
                matrix[a][b] = {"error": f"{type(exc).__name__}: {exc}"}
    return {"pairing": pairing, "pairs": matrix}


def _aligned_market_returns(
    record: BacktestRecord, benchmark: PriceSeries
) -> tuple[list[float], list[float]]:
    strat, market = [], []
    for t, date in enumerate(record.dates):
        idx = benchmark.index_of(date)
        if idx is None or idx == 0:
            continue
        market.append(float(benchmark.adj_close[idx] / benchmark.adj_close[idx - 1] - 1.0))
        strat.append(float(record.daily_returns[t]))
    return strat, market


def capm_table(
    results: dict[str, list[WindowResult]],
    benchmark: PriceSeries,
    rf_annual: float,
) -> dict:
    """Per-strategy CAPM decomposition over pooled daily returns."""
    table: dict[str, dict] = {}
    for name in sorted(results):
        strat_all: list[float] = []
        market_all: list[float] = []
        for wr in results[name]:
            for sym in sorted(wr.per_symbol):
                rec, _ = wr.per_symbol[sym]
                s, m = _aligned_market_returns(rec, benchmark)
                strat_all.extend(s)
                market_all.extend(m)
        try:
            table[name] = capm_fit(strat_all, market_all, rf_annual).to_dict()
        except (DegenerateRegressor, TooFewObservations, SaberError) as exc:
            table[name] = {"error": f"{type(exc).__name__}: {exc}"}
    return table


def regime_sharpe_csv(aggregates: dict[str, AggregateResult]) -> str:
    lines = ["strategy," + ",".join((BULL, BEAR, SIDEWAYS))]
    for name in sorted(aggregates):
        per_regime = aggregates[name].per_regime
        cells = []
        for regime in (BULL, BEAR, SIDEWAYS):
            report = per_regime.get(regime)
            cells.append("" if report is None or report.sharpe is None else repr(report.sharpe))
        lines.append(f"{name}," + ",".join(cells))
    return "\n".join(lines) + "\n"


def underwater_csv(record: BacktestRecord) -> str:
    under = underwater_series(record.equity)
    lines = ["date,drawdown"]
    for date, d in zip(record.dates, under):
        lines.append(f"{date.isoformat()},{float(d)!r}")
    return "\n".join(lines) + "\n"


def write_artifacts(
    outdir: Path,
    manifest: dict,
    results: dict[str, list[WindowResult]],
    aggregates: dict[str, AggregateResult],
    regimes: dict[int, RegimeLabel],
    benchmark: PriceSeries,
    rf_annual: float,
    selection_info: dict | None = None,
    pairing: str = "window_symbol",
) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    dump_json(manifest, outdir / "manifest.json")

    records_dir = outdir / "records"
    underwater_dir = outdir / "underwater"
    windows_dir = outdir / "windows"
    for d in (records_dir, underwater_dir, windows_dir):
        d.mkdir(exist_ok=True)

    for name in sorted(results):
        dump_json(
            [wr.to_dict() for wr in results[name]],
            windows_dir / f"{name}.json",
        )
        for wr in results[name]:
            for sym in sorted(wr.per_symbol):
                rec, _ = wr.per_symbol[sym]
                stem = f"{name}__{wr.window.label}__{sym}"
                dump_json(rec.to_dict(), records_dir / f"{stem}.json")
                (underwater_dir / f"{stem}.csv").write_text(underwater_csv(rec))

    summary = {
        "kernel_backend": _kernels.KERNEL_BACKEND,
        "regimes": {
            str(year): {"annual_return": lbl.annual_return, "label": lbl.label}
            for year, lbl in sorted(regimes.items())
        },
        "strategies": {
            name: aggregates[name].to_dict() for name in sorted(aggregates)
        },
        "selection": selection_info,
    }
    dump_json(summary, outdir / "summary.json")
    dump_json(t_test_matrix(results, pairing), outdir / "ttest_matrix.json")
    dump_json(capm_table(results, benchmark, rf_annual), outdir / "capm.json")
    (outdir / "regime_sharpe.csv").write_text(regime_sharpe_csv(aggregates))


# -- report rendering -------------------------------------------------------------

def load_summary(artifact_dir: Path) -> dict:
    path = Path(artifact_dir) / "summary.json"
    if not path.is_file():
        raise MissingArtifacts(f"{path} not found (not a run artifact directory?)")
    return json.loads(path.read_text())


def _summary_rows(summary: dict) -> list[tuple[str, list]]:
    rows = []
    for name in sorted(summary.get("strategies", {})):
        metrics = summary["strategies"][name]["summary"]
        rows.append((name, [metrics.get(col) for col in METRIC_COLUMNS]))
    return rows


def _fmt(value) -> str:
    return "" if value is None else repr(value)


def render_summary(summary: dict, fmt: str) -> str:
    """Strategy x metric table (SPR, STR, AR, CR, MDD, AV) in json/csv/markdown."""
    rows = _summary_rows(summary)
    if fmt == "json":
        obj = {
            name: dict(zip(METRIC_HEADERS, vals)) for name, vals in rows
        }
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        lines = ["strategy," + ",".join(METRIC_HEADERS)]
        for name, vals in rows:
            lines.append(name + "," + ",".join(_fmt(v) for v in vals))
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        header = "| strategy | " + " | ".join(METRIC_HEADERS) + " |"
        sep = "|" + "---|" * (len(METRIC_HEADERS) + 1)
        lines = [header, sep]
        for name, vals in rows:
            lines.append("| " + name + " | " + " | ".join(_fmt(v) for v in vals) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
