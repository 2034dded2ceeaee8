"""Daily timing strategies: a signal in {+1, 0, -1} from a point-in-time view.

The shared contract: the view's cutoff is the last completed trading day
before the position day, and the returned signal governs the position held
on the position day (fills happen at that day's close; see the engine).
Comparisons that land exactly on a band or threshold emit HOLD.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .. import _kernels as kernels
from ..errors import (
    DateNotInCalendar,
    InsufficientHistory,
    SingularDesignMatrix,
)
from ..market_data import PointInTimeView

BUY = 1
HOLD = 0
SELL = -1

FLAT = "FLAT"
LONG = "LONG"


@dataclass(frozen=True)
class DecisionContext:
    """Engine-owned state handed to a strategy at each decision."""

    date: dt.date
    window_start: dt.date
    position: str
    entry_date: dt.date | None
    cash: float
    shares: float


class TimingStrategy:
    """Base class; subclasses are owned by a single (symbol, window) run."""

    name = "base"

    def reset(
        self,
        training_view: PointInTimeView | None,
        trade_start: dt.date,
        train_start: dt.date | None,
    ) -> None:
        """Called once before a window's first decision."""

    def signal(self, view: PointInTimeView, ctx: DecisionContext) -> int:
        raise NotImplementedError

    def finalize(self) -> None:
        """Called once after the window's last decision, even on failure."""


class BuyAndHold(TimingStrategy):
    """Passive benchmark: enter on the window's first decision, never exit."""

    name = "buy_and_hold"

    def __init__(self) -> None:
        self._fired = False

    def reset(self, training_view, trade_start, train_start) -> None:
        self._fired = False

    def signal(self, view, ctx) -> int:
        if not self._fired:
            self._fired = True
            return BUY
        return HOLD


def _cross(prev_fast: float, prev_slow: float, fast: float, slow: float) -> int:
    if prev_fast <= prev_slow and fast > slow:
        return BUY
    if prev_fast >= prev_slow and fast < slow:
        return SELL
    return HOLD


class SmaCross(TimingStrategy):
    name = "sma_cross"

    def __init__(self, short_window: int = 10, long_window: int = 20):
        self.short = short_window
        self.long = long_window

    def signal(self, view, ctx) -> int:
        closes = view.window_adj_close(self.long + 1)
        fast = kernels.rolling_mean(closes, self.short)
        slow = kernels.rolling_mean(closes, self.long)
        return _cross(fast[-2], slow[-2], fast[-1], slow[-1])


class WmaCross(TimingStrategy):
    name = "wma_cross"

    def __init__(self, short_window: int = 10, long_window: int = 20):
        self.short = short_window
        self.long = long_window

    def signal(self, view, ctx) -> int:
        closes = view.window_adj_close(self.long + 1)
        fast = kernels.rolling_wma(closes, self.short)
        slow = kernels.rolling_wma(closes, self.long)
        return _cross(fast[-2], slow[-2], fast[-1], slow[-1])


class AtrBand(TimingStrategy):
    """Breakout rule on a volatility band around an SMA midline."""

    name = "atr_band"

    def __init__(self, atr_period: int = 14, multiplier: float = 1.5):
        self.atr_period = atr_period
        self.multiplier = multiplier

    def signal(self, view, ctx) -> int:
        n = self.atr_period + 1
        closes = view.window_adj_close(n)
        high, low, close = view.window_hlc(n)
        middle = float(np.mean(closes[-self.atr_period :]))
        atr_value = float(kernels.atr(high, low, close, self.atr_period)[-1])
        upper = middle + self.multiplier * atr_value
        lower = middle - self.multiplier * atr_value
        price, prev = closes[-1], closes[-2]
        if prev <= upper and price > upper:
            return BUY
        if prev >= lower and price < lower:
            return SELL
        return HOLD


class Bollinger(TimingStrategy):
    """Mean-reversion: buy below the lower band, sell above the upper."""

    name = "bollinger"

    def __init__(self, period: int = 20, devfactor: float = 2.0):
        self.period = period
        self.devfactor = devfactor

    def signal(self, view, ctx) -> int:
        closes = view.window_adj_close(self.period)
        mean = float(np.mean(closes))
        std = float(np.std(closes))  # population std by convention
        price = closes[-1]
        if price < mean - self.devfactor * std:
            return BUY
        if price > mean + self.devfactor * std:
            return SELL
        return HOLD


class TrendFollowing(TimingStrategy):
    """Enter on a strict N-day high, exit on an ATR trailing stop."""

    name = "trend_following"

    def __init__(
        self,
        atr_period: int = 10,
        period: int = 20,
        stop_multiplier: float = 2.0,
    ):
        self.atr_period = atr_period
        self.period = period
        self.stop_multiplier = stop_multiplier

    def signal(self, view, ctx) -> int:
        need = max(self.period, self.atr_period) + 1
        closes = view.window_adj_close(need)
        if ctx.position == FLAT:
            window = closes[-self.period :]
            if window[-1] > np.max(window[:-1]):
                return BUY
            return HOLD
        high, low, close = view.window_hlc(self.atr_period + 1)
        atr_value = float(kernels.atr(high, low, close, self.atr_period)[-1])
        since_entry = view.bars_between(ctx.entry_date, view.cutoff)
        highest = max(b.adj_close for b in since_entry) if since_entry else closes[-1]
        if closes[-1] < highest - self.stop_multiplier * atr_value:
            return SELL
        return HOLD


class TurnOfMonth(TimingStrategy):
    """Hold only across the month boundary.

    The hold region runs from the ``before``-th-from-last trading day of a
    month through the ``after``-th trading day of the next month, computed
    purely from the trading-day calendar supplied at construction (exchange
    calendars are public information, so this is not a look-ahead). BUY fires
    on the region's first day, SELL on the first day after it.
    """

    name = "turn_of_month"

    def __init__(
        self,
        calendar: tuple[dt.date, ...],
        before_end_of_month_days: int = 5,
        after_start_of_month_business_days: int = 3,
    ):
        self.calendar = tuple(calendar)
        self.before = before_end_of_month_days
        self.after = after_start_of_month_business_days
        self._dates = set(self.calendar)
        months: dict[tuple[int, int], list[dt.date]] = {}
        for d in self.calendar:
            months.setdefault((d.year, d.month), []).append(d)
        self._buy_days = {
            days[-self.before]
            for days in months.values()
            if len(days) >= self.before
        }
        self._sell_days = {
            days[self.after]
            for days in months.values()
            if len(days) > self.after
        }

    def signal(self, view, ctx) -> int:
        if ctx.date not in self._dates:
            raise DateNotInCalendar(ctx.date)
        if ctx.date in self._buy_days:
            return BUY
        if ctx.date in self._sell_days:
            return SELL
        return HOLD


# -- ARIMA(5,1,0) predictor ------------------------------------------------------

ARIMA_ORDER = (5, 1, 0)
_MIN_FIT_BARS = 30


@dataclass(frozen=True)
class ArimaModel:
    order: tuple[int, int, int]
    ar_coefficients: tuple[float, ...]
    intercept: float
    fit_window: tuple[dt.date, dt.date]


def arima_fit(training_view: PointInTimeView, start: dt.date | None = None) -> ArimaModel:
    """Fit AR(5) + intercept on first differences of adjusted close by OLS."""
    p = ARIMA_ORDER[0]
    n_avail = training_view.available
    if n_avail < _MIN_FIT_BARS:
        raise InsufficientHistory(_MIN_FIT_BARS, n_avail)
    bars = training_view.window_bars(n_avail)
    if start is not None:
        bars = tuple(b for b in bars if b.date >= start)
    if len(bars) < _MIN_FIT_BARS:
        raise InsufficientHistory(_MIN_FIT_BARS, len(bars))
    closes = np.array([b.adj_close for b in bars])
    diffs = np.diff(closes)
    rows = len(diffs) - p
    design = np.empty((rows, p + 1))
    design[:, 0] = 1.0
    for lag in range(1, p + 1):
        design[:, lag] = diffs[p - lag : p - lag + rows]
    target = diffs[p:]
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < p + 1:
        raise SingularDesignMatrix(
            f"design matrix rank {rank} < {p + 1} (constant or degenerate series)"
        )
    return ArimaModel(
        order=ARIMA_ORDER,
        ar_coefficients=tuple(float(c) for c in coef[1:]),
        intercept=float(coef[0]),
        fit_window=(bars[0].date, bars[-1].date),
    )


def arima_signal(model: ArimaModel, view: PointInTimeView) -> int:
    """One-step-ahead forecast of the next price difference, mapped to a signal."""
    p = len(model.ar_coefficients)
    closes = view.window_adj_close(p + 1)
    diffs = np.diff(closes)
    forecast = model.intercept
    for i, coef in enumerate(model.ar_coefficients):
        forecast += coef * diffs[-1 - i]
    if forecast > 0:
        return BUY
    if forecast < 0:
        return SELL
    return HOLD


class ArimaStrategy(TimingStrategy):
    """Fit once per window on the training look-back, then forecast daily."""

    name = "arima"

    def __init__(self, order: tuple[int, int, int] = ARIMA_ORDER):
        if tuple(order) != ARIMA_ORDER:
            raise ValueError(f"only order {ARIMA_ORDER} is supported")
        self.model: ArimaModel | None = None

    def reset(self, training_view, trade_start, train_start) -> None:
        if training_view is None:
            raise InsufficientHistory(_MIN_FIT_BARS, 0)
        self.model = arima_fit(training_view, start=train_start)

    def signal(self, view, ctx) -> int:
        return arima_signal(self.model, view)


# -- registry --------------------------------------------------------------------

TIMING_STRATEGY_NAMES = (
    "buy_and_hold",
    "sma_cross",
    "wma_cross",
    "atr_band",
    "bollinger",
    "trend_following",
    "turn_of_month",
    "arima",
)


def _require_positive_int(params: dict, key: str) -> None:
    v = params.get(key)
    if v is not None and (not isinstance(v, int) or isinstance(v, bool) or v < 1):
        raise ValueError(f"{key} must be a positive integer, got {v!r}")


def _require_positive_real(params: dict, key: str) -> None:
    v = params.get(key)
    if v is not None and (not isinstance(v, (int, float)) or v <= 0):
        raise ValueError(f"{key} must be a positive number, got {v!r}")


def build_strategy(
    name: str,
    params: dict | None = None,
    calendar: tuple[dt.date, ...] | None = None,
) -> TimingStrategy:
    """Instantiate a timing strategy by its config name.

    Parameter keys follow the experiment config verbatim (short_window,
    atr_period, devfactor, ...). ``calendar`` is required by turn_of_month.
    """
    params = dict(params or {})
    for key in ("short_window", "long_window", "atr_period", "period",
                "before_end_of_month_days", "after_start_of_month_business_days"):
        _require_positive_int(params, key)
    for key in ("multiplier", "devfactor", "stop_multiplier"):
        _require_positive_real(params, key)

    if name == "buy_and_hold":
        return BuyAndHold()
    if name == "sma_cross":
        return SmaCross(**params)
    if name == "wma_cross":
        return WmaCross(**params)
    if name == "atr_band":
        return AtrBand(**params)
    if name == "bollinger":
        return Bollinger(**params)
    if name == "trend_following":
        return TrendFollowing(**params)
    if name == "turn_of_month":
        if calendar is None:
            raise ValueError("turn_of_month requires a trading-day calendar")
        return TurnOfMonth(calendar, **params)
    if name == "arima":
        if "order" in params:
            params["order"] = tuple(params["order"])
        return ArimaStrategy(**params)
    raise ValueError(f"unknown timing strategy {name!r}")
