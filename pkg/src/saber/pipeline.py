"""Rolling windows and the two-step composite protocol.

A window trades over [trade_start, trade_end) with training data allowed
from train_start; boundaries snap to the first trading day on or after the
nominal calendar date because reads go through per-symbol bar dates. Cells
(window x strategy x symbol) are independent: a failing cell is recorded
with its reason and never disturbs the others.
"""

from __future__ import annotations

import datetime as dt
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analytics import MetricsReport, RegimeLabel, compute_metrics, mean_of_reports
from .engine import BacktestRecord, ExecutionConfig, run_backtest
from .errors import (
    EmptyCandidateSet,
    EmptyRange,
    EmptyResults,
    NoEligibleCandidates,
    SaberError,
)
from .market_data import MarketDataStore, Universe
from .strategies.selection import SelectionResult, SelectionSpec, run_selection
from .strategies.timing import TimingStrategy

logger = logging.getLogger(__name__)

StrategyFactory = Callable[[], TimingStrategy]


@dataclass(frozen=True)
class WindowSpec:
    eval_start: dt.date
    eval_end: dt.date
    window_len_years: int = 1
    step_years: int = 1
    train_lookback_years: int = 2

    def __post_init__(self):
        if self.eval_start >= self.eval_end:
            raise EmptyRange(f"{self.eval_start} >= {self.eval_end}")
        for name in ("window_len_years", "step_years", "train_lookback_years"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(frozen=True)
class Window:
    train_start: dt.date
    trade_start: dt.date
    trade_end: dt.date  # exclusive

    @property
    def label(self) -> str:
        return f"{self.trade_start.isoformat()}_{self.trade_end.isoformat()}"

    @property
    def final_year(self) -> int:
        """Calendar year of the window's last traded day."""
        return (self.trade_end - dt.timedelta(days=1)).year

    def to_dict(self) -> dict:
        return {
            "train_start": self.train_start.isoformat(),
            "trade_start": self.trade_start.isoformat(),
            "trade_end": self.trade_end.isoformat(),
        }


def add_years(date: dt.date, years: int) -> dt.date:
    try:
        return date.replace(year=date.year + years)
    except ValueError:  # Feb 29 on a non-leap target year
        return date.replace(year=date.year + years, day=28)


def generate_windows(spec: WindowSpec) -> list[Window]:
    """Windows advance by step_years; one that would overhang eval_end is dropped."""
    windows: list[Window] = []
    i = 0
    while True:
        start = add_years(spec.eval_start, i * spec.step_years)
        end = add_years(start, spec.window_len_years)
        if end > spec.eval_end:
            break
        windows.append(
            Window(
                train_start=add_years(start, -spec.train_lookback_years),
                trade_start=start,
                trade_end=end,
            )
        )
        i += 1
    if not windows:
        raise EmptyRange(f"no full window fits in [{spec.eval_start}, {spec.eval_end})")
    return windows


@dataclass(frozen=True)
class WindowResult:
    window: Window
    strategy: str
    per_symbol: dict[str, tuple[BacktestRecord, MetricsReport]]
    averaged: MetricsReport | None
    selection: SelectionResult | None
    skipped: dict[str, str]

    def to_dict(self, include_records: bool = False) -> dict:
        out = {
            "window": self.window.to_dict(),
            "strategy": self.strategy,
            "symbols_run": sorted(self.per_symbol),
            "averaged": self.averaged.to_dict() if self.averaged else None,
            "per_symbol_metrics": {
                s: m.to_dict() for s, (_, m) in sorted(self.per_symbol.items())
            },
            "selection": self.selection.to_dict() if self.selection else None,
            "skipped": dict(sorted(self.skipped.items())),
        }
        if include_records:
            out["records"] = {
                s: r.to_dict() for s, (r, _) in sorted(self.per_symbol.items())
            }
        return out


def _run_window_cells(
    store: MarketDataStore,
    symbols: list[str],
    window: Window,
    strategy_name: str,
    factory: StrategyFactory,
    config: ExecutionConfig,
    selection: SelectionResult | None,
) -> WindowResult:
    per_symbol: dict[str, tuple[BacktestRecord, MetricsReport]] = {}
    skipped: dict[str, str] = {}
    for symbol in symbols:
        try:
            record = run_backtest(
                store, symbol, window.trade_start, window.trade_end,
                factory(), config, train_start=window.train_start,
            )
            metrics = compute_metrics(
                record.equity, config.initial_capital,
                config.risk_free_rate_annual, config.trading_days_per_year,
            )
            per_symbol[symbol] = (record, metrics)
        except SaberError as exc:
            reason = f"{type(exc).__name__}: {exc}"
            logger.info("skip %s/%s/%s: %s", window.label, strategy_name, symbol, reason)
            skipped[symbol] = reason
    averaged = (
        mean_of_reports([m for _, m in per_symbol.values()]) if per_symbol else None
    )
    return WindowResult(
        window=window,
        strategy=strategy_name,
        per_symbol=per_symbol,
        averaged=averaged,
        selection=selection,
        skipped=skipped,
    )


def _execute(
    tasks: list[tuple],
    jobs: int,
) -> list[WindowResult]:
    if jobs <= 1:
        return [_run_window_cells(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: _run_window_cells(*t), tasks))


def run_selected(
    store: MarketDataStore,
    symbols: list[str],
    spec: WindowSpec,
    strategies: dict[str, StrategyFactory],
    config: ExecutionConfig,
    jobs: int = 1,
) -> dict[str, list[WindowResult]]:
    """Fixed symbol list, every strategy on every window."""
    windows = generate_windows(spec)
    tasks = [
        (store, list(symbols), w, name, factory, config, None)
        for name, factory in strategies.items()
        for w in windows
    ]
    flat = _execute(tasks, jobs)
    results: dict[str, list[WindowResult]] = {name: [] for name in strategies}
    for wr in flat:
        results[wr.strategy].append(wr)
    return results


def _window_seed(base_seed: int, window_index: int) -> int:
    state = np.random.SeedSequence([base_seed, window_index]).generate_state(1, np.uint64)
    return int(state[0])


def run_composite(
    store: MarketDataStore,
    universe: Universe,
    selection_spec: SelectionSpec,
    spec: WindowSpec,
    strategies: dict[str, StrategyFactory],
    config: ExecutionConfig,
    jobs: int = 1,
) -> tuple[dict[str, list[WindowResult]], dict]:
    """Per window: point-in-time constituents -> selection -> per-symbol timing.

    Returns per-strategy window results plus a selection summary with the
    union of distinct symbols seen across windows.
    """
    windows = generate_windows(spec)
    selections: list[SelectionResult | None] = []
    selection_errors: list[str | None] = []
    for i, window in enumerate(windows):
        candidates = universe.constituents_at(window.trade_start)
        with_data = {c for c in candidates if c in store.symbols}
        dropped = candidates - with_data
        if dropped:
            logger.info(
                "window %s: %d constituents lack price data: %s",
                window.label, len(dropped), sorted(dropped),
            )
        cutoff = window.trade_start - dt.timedelta(days=1)
        try:
            selection = run_selection(
                selection_spec,
                with_data,
                lambda sym: store.view_until(sym, cutoff),
                window.trade_start,
                seed=_window_seed(selection_spec.seed, i),
                rf_annual=config.risk_free_rate_annual,
            )
            selections.append(selection)
            selection_errors.append(None)
        except (NoEligibleCandidates, EmptyCandidateSet) as exc:
            reason = f"{type(exc).__name__}: {exc}"
            logger.warning("window %s: selection failed (%s)", window.label, reason)
            selections.append(None)
            selection_errors.append(reason)

    tasks = []
    for name, factory in strategies.items():
        for window, selection in zip(windows, selections):
            if selection is None:
                continue
            tasks.append(
                (store, list(selection.symbols), window, name, factory, config, selection)
            )
    flat = _execute(tasks, jobs)
    results: dict[str, list[WindowResult]] = {name: [] for name in strategies}
    for wr in flat:
        results[wr.strategy].append(wr)
    for name in results:
        results[name].sort(key=lambda wr: wr.window.trade_start)

    distinct = sorted(
        {s for sel in selections if sel is not None for s in sel.symbols}
    )
    info = {
        "method": selection_spec.method,
        "distinct_symbols": distinct,
        "distinct_symbol_count": len(distinct),
        "windows_skipped": {
            windows[i].label: err
            for i, err in enumerate(selection_errors)
            if err is not None
        },
    }
    return results, info


@dataclass(frozen=True)
class AggregateResult:
    summary: MetricsReport
    per_window: list[tuple[Window, MetricsReport | None]]
    per_regime: dict[str, MetricsReport]

    def to_dict(self) -> dict:
        return {
            "summary": self.summary.to_dict(),
            "per_window": [
                {"window": w.to_dict(), "averaged": m.to_dict() if m else None}
                for w, m in self.per_window
            ],
            "per_regime": {
                regime: m.to_dict() for regime, m in sorted(self.per_regime.items())
            },
        }


def aggregate(
    results: list[WindowResult],
    regimes: dict[int, RegimeLabel] | None = None,
) -> AggregateResult:
    """Pool one strategy's window results: plain means, optionally per regime."""
    if not results:
        raise EmptyResults("no window results")
    defined = [wr.averaged for wr in results if wr.averaged is not None]
    if not defined:
        raise EmptyResults("every window was skipped")
    per_regime: dict[str, MetricsReport] = {}
    if regimes:
        groups: dict[str, list[MetricsReport]] = {}
        for wr in results:
            if wr.averaged is None:
                continue
            label = regimes.get(wr.window.final_year)
            if label is None:
                continue
            groups.setdefault(label.label, []).append(wr.averaged)
        per_regime = {k: mean_of_reports(v) for k, v in groups.items()}
    return AggregateResult(
        summary=mean_of_reports(defined),
        per_window=[(wr.window, wr.averaged) for wr in results],
        per_regime=per_regime,
    )
