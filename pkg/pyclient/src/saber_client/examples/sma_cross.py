"""Client-side SMA(10/20) crossover recomputed from the observe bars.

Mirrors the engine's built-in rule bit for bit: BUY when the fast mean
crosses strictly above the slow mean between the previous and current bar,
SELL on the strict downward cross, HOLD otherwise (including ties and when
fewer than long+1 bars arrive).

    python -m saber_client.examples.sma_cross
"""

import sys

from saber_client import run_client

SHORT = 10
LONG = 20


def _mean(xs) -> float:
    return sum(xs) / len(xs)


def strategy(observe: dict) -> int:
    closes = [bar["adj_close"] for bar in observe.get("bars", [])]
    if len(closes) < LONG + 1:
        return 0
    fast, slow = _mean(closes[-SHORT:]), _mean(closes[-LONG:])
    prev_fast, prev_slow = _mean(closes[-SHORT - 1:-1]), _mean(closes[-LONG - 1:-1])
    if prev_fast <= prev_slow and fast > slow:
        return 1
    if prev_fast >= prev_slow and fast < slow:
        return -1
    return 0


if __name__ == "__main__":
    sys.exit(run_client(strategy, name="sma-cross"))
