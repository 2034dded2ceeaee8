"""Bias-aware backtesting: point-in-time data, a two-step selection/timing
pipeline over rolling windows, long-only execution with commissions, and a
metrics/statistics layer for regime-aware evaluation."""

from ._kernels import KERNEL_BACKEND
from .analytics import (
    CapmFit,
    DrawdownDiagnostics,
    MetricsReport,
    PairedTTestResult,
    RegimeLabel,
    annualized_return,
    annualized_volatility,
    capm_fit,
    compute_metrics,
    cumulative_return,
    drawdown_diagnostics,
    label_regime,
    max_drawdown,
    paired_t_test,
    sharpe,
    sortino,
    student_t_two_sided_p,
    underwater_series,
)
from .engine import (
    BacktestRecord,
    ExecutionConfig,
    Portfolio,
    Trade,
    apply_signal,
    commission,
    run_backtest,
)
from .market_data import (
    MarketDataStore,
    MembershipInterval,
    PointInTimeView,
    PriceBar,
    PriceSeries,
    TextRecord,
    Universe,
    load_membership_csv,
    load_price_csv,
    load_prices_dir,
    load_texts_jsonl,
)
from .pipeline import (
    Window,
    WindowResult,
    WindowSpec,
    aggregate,
    generate_windows,
    run_composite,
    run_selected,
)
from .strategies import (
    BUY,
    HOLD,
    SELL,
    DecisionContext,
    SelectionResult,
    SelectionSpec,
    TimingStrategy,
    build_strategy,
    run_selection,
)

__version__ = "0.1.0"
