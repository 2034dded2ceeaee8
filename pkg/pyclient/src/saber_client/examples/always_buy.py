"""Echo buy-and-hold: reply BUY to every observe.

The engine treats repeated BUY while long as a no-op, so this reproduces
the built-in passive benchmark exactly.

    python -m saber_client.examples.always_buy
"""

import sys

from saber_client import run_client


def strategy(observe: dict) -> int:
    return 1


if __name__ == "__main__":
    sys.exit(run_client(strategy, name="always-buy"))
