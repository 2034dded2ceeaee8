import datetime as dt

import numpy as np
import pytest

from saber.market_data import MarketDataStore, PriceBar, PriceSeries


def weekdays(start, n):
    out = []
    d = start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


@pytest.fixture(scope="session")
def store():
    rng = np.random.Generator(np.random.PCG64(404))
    closes = 100.0 * np.exp(np.cumsum(rng.normal(0.0003, 0.02, 400)))
    dates = weekdays(dt.date(2019, 1, 1), 400)
    bars = []
    prev = closes[0]
    for date, c in zip(dates, closes):
        hi, lo = max(prev, c) * 1.004, min(prev, c) * 0.996
        bars.append(PriceBar(date, float(prev), float(hi), float(lo),
                             float(c), float(c), 50_000.0))
        prev = c
    s = MarketDataStore()
    s.add_series(PriceSeries("ABC", bars))
    return s
