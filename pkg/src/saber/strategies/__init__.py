from .timing import (
    BUY,
    HOLD,
    SELL,
    DecisionContext,
    TimingStrategy,
    build_strategy,
    TIMING_STRATEGY_NAMES,
)
from .selection import (
    SelectionSpec,
    SelectionResult,
    run_selection,
)

__all__ = [
    "BUY",
    "HOLD",
    "SELL",
    "DecisionContext",
    "TimingStrategy",
    "build_strategy",
    "TIMING_STRATEGY_NAMES",
    "SelectionSpec",
    "SelectionResult",
    "run_selection",
]
