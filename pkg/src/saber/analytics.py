"""Performance metrics, drawdown diagnostics, regime labels, and the
statistical layer (CAPM regression, paired t-tests, Student-t p-values).

Conventions, fixed so tests can be exact:
  * sample (n-1) standard deviation everywhere in this module;
  * daily risk-free rate = annual rate / 252;
  * downside deviation uses only strictly negative daily returns;
  * max drawdown is reported as a value <= 0;
  * p-values come from the exact t distribution for all sample sizes,
    evaluated through the regularized incomplete beta function.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from .errors import (
    DegenerateRegressor,
    InvalidDf,
    LengthMismatch,
    NoDataForYear,
    NoDownside,
    NonPositiveValue,
    TooFewObservations,
    TotalLoss,
    ZeroDays,
    ZeroVarianceDifferences,
    ZeroVolatility,
)
from .market_data import PriceSeries

TRADING_DAYS_PER_YEAR = 252

SHARPE_UNDEFINED = "SHARPE_UNDEFINED"
SORTINO_UNDEFINED = "SORTINO_UNDEFINED"

BULL = "BULL"
BEAR = "BEAR"
SIDEWAYS = "SIDEWAYS"


def _sample_std(x: np.ndarray) -> float:
    # identical values have zero variance by definition; np.std returns ~1e-18
    # for them because the mean rounds
    if x.size and np.all(x == x[0]):
        return 0.0
    return float(np.std(x, ddof=1))


# -- return metrics ------------------------------------------------------------

def cumulative_return(positions, market_returns) -> float:
    """Total return of holding the asset on days where the position is 1.

    Computes prod(1 + S_t * R_t) - 1 for a long-only indicator sequence S.
    """
    s = np.asarray(positions, dtype=float)
    r = np.asarray(market_returns, dtype=float)
    if s.shape != r.shape:
        raise LengthMismatch(f"{s.shape} vs {r.shape}")
    if s.size < 1:
        raise LengthMismatch("empty sequences")
    return float(np.prod(1.0 + s * r) - 1.0)


def annualized_return(cum_return: float, trading_days: int,
                      periods_per_year: int = TRADING_DAYS_PER_YEAR) -> float:
    """(1 + C) ** (252 / T) - 1."""
    if trading_days < 1:
        raise ZeroDays(trading_days)
    if cum_return <= -1.0:
        raise TotalLoss(cum_return)
    return float((1.0 + cum_return) ** (periods_per_year / trading_days) - 1.0)


def annualized_volatility(daily_returns,
                          periods_per_year: int = TRADING_DAYS_PER_YEAR) -> float:
    """Sample std of daily returns scaled by sqrt(252)."""
    r = np.asarray(daily_returns, dtype=float)
    if r.size < 2:
        raise TooFewObservations(r.size)
    return _sample_std(r) * math.sqrt(periods_per_year)


def max_drawdown(equity) -> float:
    """Worst peak-to-trough decline, running-peak single pass; <= 0."""
    v = np.ascontiguousarray(equity, dtype=float)
    if v.size < 1:
        raise NonPositiveValue("empty equity curve")
    if np.any(v <= 0):
        raise NonPositiveValue("equity values must be positive")
    return float(kernels.max_drawdown(v))


def sharpe(daily_returns, rf_annual: float = 0.03,
           periods_per_year: int = TRADING_DAYS_PER_YEAR) -> float:
    """Annualized excess return per unit of total volatility."""
    r = np.asarray(daily_returns, dtype=float)
    if r.size < 2:
        raise TooFewObservations(r.size)
    std = _sample_std(r)
    if std == 0.0:
        raise ZeroVolatility("zero return variance")
    rf_daily = rf_annual / periods_per_year
    return float((r.mean() - rf_daily) / std * math.sqrt(periods_per_year))


def sortino(daily_returns, rf_annual: float = 0.03,
            periods_per_year: int = TRADING_DAYS_PER_YEAR) -> float:
    """Annualized excess return per unit of downside volatility.

    Downside deviation is the sample std of the strictly negative returns;
    with fewer than two of them (or all equal) the ratio is undefined.
    """
    r = np.asarray(daily_returns, dtype=float)
    if r.size < 2:
        raise TooFewObservations(r.size)
    downside = r[r < 0]
    if downside.size < 2:
        raise NoDownside(f"{downside.size} negative returns")
    sigma_down = _sample_std(downside)
    if sigma_down == 0.0:
        raise NoDownside("downside returns are all equal")
    rf_daily = rf_annual / periods_per_year
    return float((r.mean() - rf_daily) / sigma_down * math.sqrt(periods_per_year))


# -- drawdown diagnostics --------------------------------------------------------

@dataclass(frozen=True)
class DrawdownDiagnostics:
    underwater: np.ndarray
    episode_count: int
    max_duration_days: int
    mean_duration_days: float
    commission_ratio: float

    def to_dict(self) -> dict:
        return {
            "episode_count": self.episode_count,
            "max_duration_days": self.max_duration_days,
            "mean_duration_days": self.mean_duration_days,
            "commission_ratio": self.commission_ratio,
        }


def underwater_series(equity) -> np.ndarray:
    """Per-day drawdown from the running peak; 0 exactly at new highs."""
    v = np.ascontiguousarray(equity, dtype=float)
    if np.any(v <= 0):
        raise NonPositiveValue("equity values must be positive")
    return kernels.underwater(v)


def drawdown_diagnostics(equity, total_commission: float = 0.0,
                         initial_capital: float = 1.0) -> DrawdownDiagnostics:
    """Episode statistics over the underwater curve plus the commission ratio.

    Episodes are maximal runs of strictly negative drawdown; a run still open
    at the end of the series counts with its observed length. The commission
    ratio is total commissions over initial capital (a turnover proxy).
    """
    under = underwater_series(equity)
    count, max_len, mean_len = kernels.episode_stats(under)
    return DrawdownDiagnostics(
        underwater=under,
        episode_count=int(count),
        max_duration_days=int(max_len),
        mean_duration_days=float(mean_len),
        commission_ratio=total_commission / initial_capital,
    )


# -- regimes ---------------------------------------------------------------------

@dataclass(frozen=True)
class RegimeLabel:
    year: int
    annual_return: float
    label: str


def label_regime(index_series: PriceSeries, year: int) -> RegimeLabel:
    """Calendar-year label from the benchmark's annual return.

    Bull at +20% or above, bear at -20% or below (both inclusive), sideways
    in between; the return uses the adjusted closes of the year's first and
    last trading days.
    """
    dates = index_series.dates_between(dt.date(year, 1, 1), dt.date(year + 1, 1, 1))
    if not dates:
        raise NoDataForYear(year)
    first = index_series.adj_close[index_series.index_of(dates[0])]
    last = index_series.adj_close[index_series.index_of(dates[-1])]
    r_y = float((last - first) / first)
    if r_y >= 0.20:
        label = BULL
    elif r_y <= -0.20:
        label = BEAR
    else:
        label = SIDEWAYS
    return RegimeLabel(year=year, annual_return=r_y, label=label)


# -- Student-t machinery -----------------------------------------------------------

def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Lentz's method for the incomplete beta continued fraction
    max_iter = 300
    eps = 3e-16
    fpmin = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) via the continued-fraction expansion."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """P(|T| >= |t|) for T ~ Student-t(df), exact via I_x(df/2, 1/2)."""
    if not isinstance(df, (int, np.integer)) or isinstance(df, bool) or df < 1:
        raise InvalidDf(df)
    x = df / (df + float(t) * float(t))
    p = regularized_incomplete_beta(df / 2.0, 0.5, x)
    return min(max(p, 0.0), 1.0)


# -- regression and tests -----------------------------------------------------------

@dataclass(frozen=True)
class CapmFit:
    alpha: float            # annualized: daily intercept x 252
    beta: float
    alpha_p_value: float
    beta_p_value: float
    residual_variance: float
    n: int

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "alpha_p_value": self.alpha_p_value,
            "beta_p_value": self.beta_p_value,
            "residual_variance": self.residual_variance,
            "n": self.n,
        }


def capm_fit(strategy_returns, market_returns, rf_annual: float = 0.03,
             periods_per_year: int = TRADING_DAYS_PER_YEAR) -> CapmFit:
    """OLS of daily excess strategy returns on daily excess market returns."""
    r_s = np.asarray(strategy_returns, dtype=float)
    r_m = np.asarray(market_returns, dtype=float)
    if r_s.shape != r_m.shape:
        raise LengthMismatch(f"{r_s.shape} vs {r_m.shape}")
    n = r_s.size
    if n < 3:
        raise TooFewObservations(n)
    rf_daily = rf_annual / periods_per_year
    y = r_s - rf_daily
    x = r_m - rf_daily
    x_bar, y_bar = float(x.mean()), float(y.mean())
    sxx = float(np.sum((x - x_bar) ** 2))
    if sxx == 0.0:
        raise DegenerateRegressor("market excess returns are constant")
    sxy = float(np.sum((x - x_bar) * (y - y_bar)))
    beta = sxy / sxx
    alpha_daily = y_bar - beta * x_bar
    resid = y - alpha_daily - beta * x
    df = n - 2
    s2 = float(np.sum(resid**2)) / df
    se_beta = math.sqrt(s2 / sxx)
    se_alpha = math.sqrt(s2 * (1.0 / n + x_bar**2 / sxx))

    def p_value(coef: float, se: float) -> float:
        if se == 0.0:
            return 1.0 if coef == 0.0 else 0.0
        return student_t_two_sided_p(coef / se, df)

    return CapmFit(
        alpha=alpha_daily * periods_per_year,
        beta=beta,
        alpha_p_value=p_value(alpha_daily, se_alpha),
        beta_p_value=p_value(beta, se_beta),
        residual_variance=s2,
        n=n,
    )


@dataclass(frozen=True)
class PairedTTestResult:
    t_statistic: float
    p_value: float
    df: int
    mean_difference: float

    def to_dict(self) -> dict:
        return {
            "t_statistic": self.t_statistic,
            "p_value": self.p_value,
            "df": self.df,
            "mean_difference": self.mean_difference,
        }


def paired_t_test(a, b) -> PairedTTestResult:
    """Two-sided paired t-test on elementwise differences a - b."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape:
        raise LengthMismatch(f"{x.shape} vs {y.shape}")
    n = x.size
    if n < 2:
        raise TooFewObservations(n)
    d = x - y
    sd = _sample_std(d)
    if sd == 0.0:
        raise ZeroVarianceDifferences("all differences equal")
    t = float(d.mean()) / (sd / math.sqrt(n))
    return PairedTTestResult(
        t_statistic=t,
        p_value=student_t_two_sided_p(t, n - 1),
        df=n - 1,
        mean_difference=float(d.mean()),
    )


# -- report bundle -------------------------------------------------------------------

@dataclass(frozen=True)
class MetricsReport:
    cumulative_return: float
    annualized_return: float
    annualized_volatility: float | None
    max_drawdown: float
    sharpe: float | None
    sortino: float | None
    trading_days: int
    flags: frozenset = field(default_factory=frozenset)

    METRIC_FIELDS = (
        "sharpe", "sortino", "annualized_return", "cumulative_return",
        "max_drawdown", "annualized_volatility",
    )

    def to_dict(self) -> dict:
        return {
            "cumulative_return": self.cumulative_return,
            "annualized_return": self.annualized_return,
            "annualized_volatility": self.annualized_volatility,
            "max_drawdown": self.max_drawdown,
            "sharpe": self.sharpe,
            "sortino": self.sortino,
            "trading_days": self.trading_days,
            "flags": sorted(self.flags),
        }


def compute_metrics(equity, initial_capital: float, rf_annual: float = 0.03,
                    periods_per_year: int = TRADING_DAYS_PER_YEAR) -> MetricsReport:
    """Full metric bundle for one equity curve.

    Daily returns include the transition from initial capital into the first
    marked day, so their compounded product equals the cumulative return.
    Sharpe/Sortino failures degrade to flags instead of raising.
    """
    v = np.asarray(equity, dtype=float)
    returns = np.empty(v.size)
    returns[0] = v[0] / initial_capital - 1.0
    returns[1:] = v[1:] / v[:-1] - 1.0

    cum = float(v[-1] / initial_capital - 1.0)
    flags = set()
    try:
        spr = sharpe(returns, rf_annual, periods_per_year)
    except (ZeroVolatility, TooFewObservations):
        spr = None
        flags.add(SHARPE_UNDEFINED)
    try:
        strt = sortino(returns, rf_annual, periods_per_year)
    except (NoDownside, TooFewObservations):
        strt = None
        flags.add(SORTINO_UNDEFINED)
    try:
        av = annualized_volatility(returns, periods_per_year)
    except TooFewObservations:
        av = None
    return MetricsReport(
        cumulative_return=cum,
        annualized_return=annualized_return(cum, v.size, periods_per_year),
        annualized_volatility=av,
        max_drawdown=max_drawdown(v),
        sharpe=spr,
        sortino=strt,
        trading_days=int(v.size),
        flags=frozenset(flags),
    )


def mean_of_reports(reports: list[MetricsReport]) -> MetricsReport:
    """Unweighted arithmetic mean per metric over the reports.

    Each metric averages only the reports where it is defined; a metric with
    no defined values stays None and keeps its undefined flag.
    """
    if not reports:
        raise ZeroDays("no reports to average")

    def mean_field(name: str):
        vals = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        return float(np.mean(vals)) if vals else None

    spr = mean_field("sharpe")
    strt = mean_field("sortino")
    flags = set()
    if spr is None:
        flags.add(SHARPE_UNDEFINED)
    if strt is None:
        flags.add(SORTINO_UNDEFINED)
    return MetricsReport(
        cumulative_return=mean_field("cumulative_return"),
        annualized_return=mean_field("annualized_return"),
        annualized_volatility=mean_field("annualized_volatility"),
        max_drawdown=mean_field("max_drawdown"),
        sharpe=spr,
        sortino=strt,
        trading_days=int(round(float(np.mean([r.trading_days for r in reports])))),
        flags=frozenset(flags),
    )
