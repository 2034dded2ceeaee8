"""Optional real-data replication (never a gating test).

Given user-supplied daily price CSVs for TSLA, NFLX, AMZN and MSFT covering
2022-10-06 through 2023-04-10, runs buy-and-hold per symbol under the default
commission schedule and prints CR and MDD in percent. Pass --expect to diff
the output against reference values; adjusted-close vendors differ, so a
couple of absolute percentage points of slack is normal.

    python3 scripts/replicate_reference_period.py /path/to/prices \
        --expect NFLX:CR=43.08 --tolerance 2.0
"""

import argparse
import datetime as dt
import sys

from saber.analytics import compute_metrics
from saber.engine import ExecutionConfig, run_backtest
from saber.market_data import load_prices_dir
from saber.strategies.timing import build_strategy

SYMBOLS = ("TSLA", "NFLX", "AMZN", "MSFT")
START = dt.date(2022, 10, 6)
END = dt.date(2023, 4, 11)  # exclusive: trades through 2023-04-10


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("prices_dir", help="directory of <TICKER>.csv files")
    parser.add_argument("--expect", action="append", default=[],
                        metavar="SYM:METRIC=VALUE",
                        help="reference value in percent, e.g. NFLX:CR=43.08")
    parser.add_argument("--tolerance", type=float, default=2.0,
                        help="absolute percentage-point slack for --expect")
    args = parser.parse_args()

    expectations = {}
    for item in args.expect:
        sym_metric, value = item.split("=")
        sym, metric = sym_metric.split(":")
        expectations[(sym, metric.upper())] = float(value)

    store = load_prices_dir(args.prices_dir)
    config = ExecutionConfig()
    failures = 0
    print(f"{'symbol':<8} {'CR %':>10} {'MDD %':>10}")
    for symbol in SYMBOLS:
        if symbol not in store.symbols:
            print(f"{symbol:<8} (no data)")
            continue
        record = run_backtest(store, symbol, START, END,
                              build_strategy("buy_and_hold"), config)
        report = compute_metrics(record.equity, config.initial_capital)
        cr = 100 * report.cumulative_return
        mdd = 100 * report.max_drawdown
        print(f"{symbol:<8} {cr:>10.3f} {mdd:>10.3f}")
        for metric, got in (("CR", cr), ("MDD", mdd)):
            want = expectations.get((symbol, metric))
            if want is not None and abs(got - want) > args.tolerance:
                print(f"  !! {symbol} {metric}: got {got:.3f}, expected "
                      f"{want:.3f} +/- {args.tolerance}")
                failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
