"""Window-start stock selection: random-K, momentum, low-volatility, and a
Sharpe-times-diversification screen with a greedy fallback.

All scoring reads go through point-in-time views whose cutoff precedes the
window start, so appending later data can never change a selection. Candidates
missing the required history are dropped from that window's pool and logged,
never fatal.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..analytics import sharpe
from ..errors import (
    DegenerateReturns,
    EmptyCandidateSet,
    InsufficientHistory,
    NoEligibleCandidates,
)
from ..market_data import PointInTimeView

logger = logging.getLogger(__name__)

SELECTION_METHODS = ("random_k", "momentum", "volatility_effect", "fincon")

ViewFactory = Callable[[str], PointInTimeView]


@dataclass(frozen=True)
class SelectionSpec:
    method: str = "random_k"
    k: int = 5
    seed: int = 0
    momentum_period: int = 100
    skip_period: int = 21
    vol_lookback: int = 21
    fincon_lookback_years: int = 2
    corr_threshold: float = 0.7

    def __post_init__(self):
        if self.method not in SELECTION_METHODS:
            raise ValueError(f"unknown selection method {self.method!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.skip_period >= self.momentum_period:
            raise ValueError("skip_period must be < momentum_period")
        if not 0 < self.corr_threshold <= 1:
            raise ValueError("corr_threshold must be in (0, 1]")


@dataclass(frozen=True)
class SelectionResult:
    window_start: dt.date
    symbols: tuple[str, ...]
    scores: dict[str, float]
    method: str
    path: str | None = None
    candidates: tuple[str, ...] = ()
    skipped: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "window_start": self.window_start.isoformat(),
            "symbols": list(self.symbols),
            "scores": {s: self.scores[s] for s in sorted(self.scores)},
            "method": self.method,
            "path": self.path,
            "candidates": sorted(self.candidates),
            "skipped": sorted(self.skipped),
        }


def select_random_k(candidates: set[str], k: int, seed: int,
                    window_start: dt.date) -> SelectionResult:
    """Uniform draw without replacement via partial Fisher-Yates over PCG64.

    Candidates are sorted lexicographically before the shuffle so the draw is
    reproducible across platforms for a given seed.
    """
    pool = sorted(candidates)
    if not pool:
        raise EmptyCandidateSet(f"no candidates at {window_start}")
    rng = np.random.Generator(np.random.PCG64(seed))
    take = min(k, len(pool))
    for i in range(take):
        j = i + int(rng.integers(0, len(pool) - i))
        pool[i], pool[j] = pool[j], pool[i]
    chosen = tuple(pool[:take])
    return SelectionResult(
        window_start=window_start,
        symbols=chosen,
        scores={},
        method="random_k",
        candidates=tuple(sorted(candidates)),
    )


def momentum_score(view: PointInTimeView, momentum_period: int = 100,
                   skip: int = 21) -> float:
    """adj_close(t - skip) / adj_close(t - momentum_period) - 1, t = cutoff."""
    closes = view.window_adj_close(momentum_period + 1)
    return float(closes[-1 - skip] / closes[-1 - momentum_period] - 1.0)


def weekly_log_volatility(view: PointInTimeView, lookback: int = 21) -> float:
    """Sample std of overlapping 5-trading-day log returns over the look-back."""
    closes = view.window_adj_close(lookback + 5)
    weekly = np.log(closes[5:] / closes[:-5])
    return float(np.std(weekly, ddof=1))


def _rank_by_score(
    candidates: set[str],
    view_factory: ViewFactory,
    k: int,
    score_fn: Callable[[PointInTimeView], float],
    descending: bool,
    method: str,
    window_start: dt.date,
) -> SelectionResult:
    scores: dict[str, float] = {}
    skipped: list[str] = []
    for symbol in sorted(candidates):
        try:
            scores[symbol] = score_fn(view_factory(symbol))
        except InsufficientHistory as exc:
            logger.info("selection %s: dropping %s (%s)", method, symbol, exc)
            skipped.append(symbol)
    if not scores:
        raise NoEligibleCandidates(f"{method} at {window_start}: no candidate has history")
    sign = -1.0 if descending else 1.0
    ranked = sorted(scores, key=lambda s: (sign * scores[s], s))
    chosen = tuple(ranked[: min(k, len(ranked))])
    return SelectionResult(
        window_start=window_start,
        symbols=chosen,
        scores=scores,
        method=method,
        candidates=tuple(sorted(candidates)),
        skipped=tuple(skipped),
    )


def select_top_momentum(candidates: set[str], view_factory: ViewFactory, k: int,
                        window_start: dt.date, momentum_period: int = 100,
                        skip: int = 21) -> SelectionResult:
    """Top-k by momentum score, descending; ties broken by ticker."""
    return _rank_by_score(
        candidates, view_factory, k,
        lambda v: momentum_score(v, momentum_period, skip),
        descending=True, method="momentum", window_start=window_start,
    )


def select_low_volatility(candidates: set[str], view_factory: ViewFactory, k: int,
                          window_start: dt.date, lookback: int = 21) -> SelectionResult:
    """Bottom-k by weekly log-return volatility, ascending; ties by ticker."""
    return _rank_by_score(
        candidates, view_factory, k,
        lambda v: weekly_log_volatility(v, lookback),
        descending=False, method="volatility_effect", window_start=window_start,
    )


def fincon_select(
    candidates: set[str],
    view_factory: ViewFactory,
    k: int,
    window_start: dt.date,
    lookback_years: int = 2,
    corr_threshold: float = 0.7,
    rf_annual: float = 0.03,
) -> SelectionResult:
    """Diversification-aware screen: Sharpe x (1 - mean correlation).

    The primary portfolio is the top-k by that score. If the mean pairwise
    correlation inside the chosen k exceeds ``corr_threshold``, the selection
    is rebuilt greedily: seed with the highest-Sharpe symbol, then repeatedly
    add the candidate least correlated with the already-selected set.
    """
    n_days = 252 * lookback_years
    returns: dict[str, np.ndarray] = {}
    skipped: list[str] = []
    for symbol in sorted(candidates):
        view = view_factory(symbol)
        try:
            closes = view.window_adj_close(n_days + 1)
        except InsufficientHistory as exc:
            logger.info("selection fincon: dropping %s (%s)", symbol, exc)
            skipped.append(symbol)
            continue
        r = closes[1:] / closes[:-1] - 1.0
        if np.all(r == r[0]) or float(np.std(r, ddof=1)) == 0.0:
            logger.info("selection fincon: dropping %s (%s)", symbol,
                        DegenerateReturns(symbol))
            skipped.append(symbol)
            continue
        returns[symbol] = r
    if not returns:
        raise NoEligibleCandidates(f"fincon at {window_start}: no eligible candidate")

    symbols = sorted(returns)
    m = len(symbols)
    sharpes = {s: sharpe(returns[s], rf_annual) for s in symbols}
    if m == 1:
        only = symbols[0]
        return SelectionResult(
            window_start=window_start, symbols=(only,),
            scores={only: sharpes[only]}, method="fincon", path="primary",
            candidates=tuple(sorted(candidates)), skipped=tuple(skipped),
        )

    matrix = np.corrcoef(np.vstack([returns[s] for s in symbols]))
    rho_bar = {
        s: float((matrix[i].sum() - 1.0) / (m - 1))
        for i, s in enumerate(symbols)
    }
    scores = {s: sharpes[s] * (1.0 - rho_bar[s]) for s in symbols}
    primary = sorted(symbols, key=lambda s: (-scores[s], s))[: min(k, m)]

    def mean_internal_corr(chosen: list[str]) -> float:
        if len(chosen) < 2:
            return 0.0
        idx = [symbols.index(s) for s in chosen]
        sub = matrix[np.ix_(idx, idx)]
        off = sub[np.triu_indices(len(idx), k=1)]
        return float(off.mean())

    path = "primary"
    chosen = primary
    if mean_internal_corr(primary) > corr_threshold:
        path = "fallback"
        remaining = set(symbols)
        first = sorted(symbols, key=lambda s: (-sharpes[s], s))[0]
        chosen = [first]
        remaining.discard(first)
        while len(chosen) < min(k, m) and remaining:
            idx_sel = [symbols.index(s) for s in chosen]

            def corr_to_selected(s: str) -> float:
                return float(matrix[symbols.index(s), idx_sel].mean())

            nxt = sorted(remaining, key=lambda s: (corr_to_selected(s), s))[0]
            chosen.append(nxt)
            remaining.discard(nxt)

    return SelectionResult(
        window_start=window_start,
        symbols=tuple(chosen),
        scores=scores,
        method="fincon",
        path=path,
        candidates=tuple(sorted(candidates)),
        skipped=tuple(skipped),
    )


def run_selection(
    spec: SelectionSpec,
    candidates: set[str],
    view_factory: ViewFactory,
    window_start: dt.date,
    seed: int | None = None,
    rf_annual: float = 0.03,
) -> SelectionResult:
    """Dispatch a selection spec for one window."""
    if spec.method == "random_k":
        return select_random_k(
            candidates, spec.k, spec.seed if seed is None else seed, window_start
        )
    if spec.method == "momentum":
        return select_top_momentum(
            candidates, view_factory, spec.k, window_start,
            spec.momentum_period, spec.skip_period,
        )
    if spec.method == "volatility_effect":
        return select_low_volatility(
            candidates, view_factory, spec.k, window_start, spec.vol_lookback
        )
    return fincon_select(
        candidates, view_factory, spec.k, window_start,
        spec.fincon_lookback_years, spec.corr_threshold, rf_annual,
    )
