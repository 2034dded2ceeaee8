"""Single-symbol, single-window execution: signal -> position -> accounting.

Timing convention: the signal for day d is computed from a view cut off at
the previous trading day and filled at day d's adjusted close, so the
position participates in returns from day d+1 onward (day d itself only via
the close fill). Long-only, whole shares, all-in on BUY and full liquidation
on SELL; any position still open at the window's last bar is liquidated
there. ``fractional_shares`` is a test-only mode used to check the engine
against the closed-form compounded-return identity.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import NoBarsInWindow, NonPositivePrice, ZeroShares
from .market_data import MarketDataStore
from .strategies.timing import BUY, FLAT, LONG, SELL, DecisionContext, TimingStrategy


@dataclass(frozen=True)
class ExecutionConfig:
    initial_capital: float = 100_000.0
    commission_per_share: float = 0.0049
    commission_minimum: float = 0.99
    risk_free_rate_annual: float = 0.03
    trading_days_per_year: int = 252
    fractional_shares: bool = False

    def __post_init__(self):
        if self.initial_capital <= 0:
            raise ValueError("initial_capital must be positive")
        if self.commission_per_share < 0 or self.commission_minimum < 0:
            raise ValueError("commissions must be non-negative")
        if self.commission_minimum < self.commission_per_share:
            raise ValueError("commission_minimum must cover the per-share rate")
        if self.trading_days_per_year < 1:
            raise ValueError("trading_days_per_year must be positive")


@dataclass(frozen=True)
class Portfolio:
    cash: float
    shares: float = 0.0

    @property
    def position(self) -> str:
        return LONG if self.shares > 0 else FLAT


@dataclass(frozen=True)
class Trade:
    date: dt.date
    side: str
    shares: float
    price: float
    commission: float

    def to_dict(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "side": self.side,
            "shares": self.shares,
            "price": self.price,
            "commission": self.commission,
        }


def commission(shares: float, config: ExecutionConfig) -> float:
    """Per-order fee: max(minimum, per-share rate x share count).

    The per-share leg is quantized to cents; fees are currency amounts, and
    this keeps values like 1000 shares x $0.0049 at exactly $4.90.
    """
    if shares <= 0:
        raise ZeroShares(shares)
    return max(config.commission_minimum, round(config.commission_per_share * shares, 2))


def _max_affordable_shares(cash: float, price: float, config: ExecutionConfig) -> float:
    """Largest share count s with s*price + commission(s) <= cash."""
    if config.fractional_shares:
        if config.commission_per_share == 0 and config.commission_minimum == 0:
            return cash / price
        best = 0.0
        for s in ((cash - config.commission_minimum) / price,
                  cash / (price + config.commission_per_share)):
            # closed forms can overshoot by an ulp; back off until affordable
            for _ in range(3):
                if s <= 0:
                    break
                if s * price + commission(s, config) <= cash:
                    best = max(best, s)
                    break
                s = np.nextafter(s, 0.0)
        return best
    hi = int(cash // price)
    lo = 0
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid * price + commission(mid, config) <= cash:
            lo = mid
        else:
            hi = mid - 1
    return float(lo)


def apply_signal(
    portfolio: Portfolio,
    signal: int,
    price: float,
    date: dt.date,
    config: ExecutionConfig,
) -> tuple[Portfolio, Trade | None]:
    """One execution step; BUY-while-LONG, SELL-while-FLAT and HOLD are no-ops."""
    if price <= 0:
        raise NonPositivePrice(price)
    if signal == BUY and portfolio.shares == 0:
        s = _max_affordable_shares(portfolio.cash, price, config)
        if s <= 0:
            return portfolio, None
        fee = commission(s, config)
        cash_after = portfolio.cash - s * price - fee
        if config.fractional_shares and -1e-9 < cash_after < 0:
            cash_after = 0.0
        return (
            Portfolio(cash=cash_after, shares=s),
            Trade(date=date, side="BUY", shares=s, price=price, commission=fee),
        )
    if signal == SELL and portfolio.shares > 0:
        fee = commission(portfolio.shares, config)
        return (
            Portfolio(cash=portfolio.cash + portfolio.shares * price - fee, shares=0.0),
            Trade(date=date, side="SELL", shares=portfolio.shares, price=price,
                  commission=fee),
        )
    return portfolio, None


@dataclass(frozen=True)
class BacktestRecord:
    symbol: str
    window_start: dt.date
    window_end: dt.date
    strategy: str
    dates: tuple[dt.date, ...]
    equity: np.ndarray
    daily_returns: np.ndarray   # element 0 is the move from initial capital
    positions: np.ndarray       # 1 when long during day t, else 0
    trades: tuple[Trade, ...]
    total_commission: float
    initial_capital: float
    incidents: tuple[str, ...] = ()

    @property
    def cumulative_return(self) -> float:
        return float(self.equity[-1] / self.initial_capital - 1.0)

    def to_dict(self) -> dict:
        return {
            "symbol": self.symbol,
            "window_start": self.window_start.isoformat(),
            "window_end": self.window_end.isoformat(),
            "strategy": self.strategy,
            "dates": [d.isoformat() for d in self.dates],
            "equity": [float(v) for v in self.equity],
            "daily_returns": [float(r) for r in self.daily_returns],
            "positions": [int(p) for p in self.positions],
            "trades": [t.to_dict() for t in self.trades],
            "total_commission": self.total_commission,
            "initial_capital": self.initial_capital,
            "incidents": list(self.incidents),
        }

    def equity_csv(self) -> str:
        lines = ["date,value,return"]
        for d, v, r in zip(self.dates, self.equity, self.daily_returns):
            lines.append(f"{d.isoformat()},{v!r},{r!r}")
        return "\n".join(lines) + "\n"

    def trades_csv(self) -> str:
        lines = ["date,side,shares,price,commission"]
        for t in self.trades:
            lines.append(
                f"{t.date.isoformat()},{t.side},{t.shares!r},{t.price!r},{t.commission!r}"
            )
        return "\n".join(lines) + "\n"


def run_backtest(
    store: MarketDataStore,
    symbol: str,
    trade_start: dt.date,
    trade_end: dt.date,
    strategy: TimingStrategy,
    config: ExecutionConfig,
    train_start: dt.date | None = None,
) -> BacktestRecord:
    """Run one (symbol, window, strategy) cell; trade_end is exclusive."""
    series = store.series(symbol)
    days = series.dates_between(trade_start, trade_end)
    if not days:
        raise NoBarsInWindow(f"{symbol}: no bars in [{trade_start}, {trade_end})")

    pre_cutoff = series.last_date_before(days[0])
    training_view = (
        store.view_until(symbol, pre_cutoff) if pre_cutoff is not None else None
    )
    strategy.reset(training_view, trade_start, train_start)

    portfolio = Portfolio(cash=config.initial_capital)
    entry_date: dt.date | None = None
    trades: list[Trade] = []
    n = len(days)
    equity = np.empty(n)
    positions = np.zeros(n, dtype=np.int64)

    try:
        for t, day in enumerate(days):
            positions[t] = 1 if portfolio.shares > 0 else 0
            cutoff = series.last_date_before(day) or (day - dt.timedelta(days=1))
            view = store.view_until(symbol, cutoff)
            ctx = DecisionContext(
                date=day,
                window_start=trade_start,
                position=portfolio.position,
                entry_date=entry_date,
                cash=portfolio.cash,
                shares=portfolio.shares,
            )
            signal = strategy.signal(view, ctx)
            price = float(series.adj_close[series.index_of(day)])
            portfolio, trade = apply_signal(portfolio, signal, price, day, config)
            if trade is not None:
                trades.append(trade)
                entry_date = day if trade.side == "BUY" else None
            equity[t] = portfolio.cash + portfolio.shares * price

        if portfolio.shares > 0:
            last_price = float(series.adj_close[series.index_of(days[-1])])
            portfolio, trade = apply_signal(portfolio, SELL, last_price, days[-1], config)
            trades.append(trade)
            equity[-1] = portfolio.cash
    finally:
        strategy.finalize()

    returns = np.empty(n)
    returns[0] = equity[0] / config.initial_capital - 1.0
    returns[1:] = equity[1:] / equity[:-1] - 1.0

    return BacktestRecord(
        symbol=symbol,
        window_start=trade_start,
        window_end=trade_end,
        strategy=strategy.name,
        dates=tuple(days),
        equity=equity,
        daily_returns=returns,
        positions=positions,
        trades=tuple(trades),
        total_commission=float(sum(t.commission for t in trades)),
        initial_capital=config.initial_capital,
        incidents=tuple(getattr(strategy, "incidents", ())),
    )
