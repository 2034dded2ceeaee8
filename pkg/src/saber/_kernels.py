"""Numeric hot kernels: drawdown, rolling indicators, episode statistics.

Two interchangeable backends live here. The default backend compiles the
loop kernels with numba's ``@njit``; a pure-numpy vectorized path is kept as
a fallback and can be forced with ``SABER_KERNELS=numpy`` (``=numba`` forces
the jitted path and raises if numba is unavailable). ``benchmarks/
bench_kernels.py`` compares both.

All kernels take float64 arrays and are free of Python object access so the
same source works under nopython compilation.
"""

from __future__ import annotations

import os

import numpy as np

_BACKEND_ENV = "SABER_KERNELS"


# -- loop implementations (numba-compilable) ----------------------------------

def _max_drawdown_loop(values):
    peak = values[0]
    worst = 0.0
    for i in range(values.shape[0]):
        v = values[i]
        if v > peak:
            peak = v
        dd = (v - peak) / peak
        if dd < worst:
            worst = dd
    return worst


def _underwater_loop(values):
    out = np.empty(values.shape[0])
    peak = values[0]
    for i in range(values.shape[0]):
        v = values[i]
        if v > peak:
            peak = v
        out[i] = (v - peak) / peak
    return out


def _episode_stats_loop(under):
    # maximal runs with D < 0; a run still open at the end counts in full
    count = 0
    max_len = 0
    total = 0
    run = 0
    for i in range(under.shape[0]):
        if under[i] < 0.0:
            if run == 0:
                count += 1
            run += 1
            if run > max_len:
                max_len = run
        else:
            total += run
            run = 0
    total += run
    mean = total / count if count > 0 else 0.0
    return count, max_len, mean


def _rolling_mean_loop(x, window):
    n = x.shape[0]
    out = np.full(n, np.nan)
    for i in range(window - 1, n):
        s = 0.0
        for j in range(i - window + 1, i + 1):
            s += x[j]
        out[i] = s / window
    return out


def _rolling_wma_loop(x, window):
    n = x.shape[0]
    out = np.full(n, np.nan)
    denom = window * (window + 1) / 2.0
    for i in range(window - 1, n):
        s = 0.0
        w = 1.0
        for j in range(i - window + 1, i + 1):
            s += w * x[j]
            w += 1.0
        out[i] = s / denom
    return out


def _true_range_loop(high, low, close):
    n = high.shape[0]
    out = np.full(n, np.nan)
    for i in range(1, n):
        hl = high[i] - low[i]
        hc = abs(high[i] - close[i - 1])
        lc = abs(low[i] - close[i - 1])
        tr = hl
        if hc > tr:
            tr = hc
        if lc > tr:
            tr = lc
        out[i] = tr
    return out


def _atr_loop(high, low, close, window):
    n = high.shape[0]
    tr = np.full(n, np.nan)
    for i in range(1, n):
        hl = high[i] - low[i]
        hc = abs(high[i] - close[i - 1])
        lc = abs(low[i] - close[i - 1])
        t = hl
        if hc > t:
            t = hc
        if lc > t:
            t = lc
        tr[i] = t
    out = np.full(n, np.nan)
    for i in range(window, n):
        s = 0.0
        for j in range(i - window + 1, i + 1):
            s += tr[j]
        out[i] = s / window
    return out


# -- vectorized numpy implementations ------------------------------------------

def _max_drawdown_np(values):
    peaks = np.maximum.accumulate(values)
    return float(np.min((values - peaks) / peaks))


def _underwater_np(values):
    peaks = np.maximum.accumulate(values)
    return (values - peaks) / peaks


def _episode_stats_np(under):
    wet = under < 0.0
    if not wet.any():
        return 0, 0, 0.0
    edges = np.diff(wet.astype(np.int8))
    starts = np.flatnonzero(edges == 1) + 1
    ends = np.flatnonzero(edges == -1) + 1
    if wet[0]:
        starts = np.concatenate(([0], starts))
    if wet[-1]:
        ends = np.concatenate((ends, [wet.shape[0]]))
    lengths = ends - starts
    return int(lengths.size), int(lengths.max()), float(lengths.mean())


def _rolling_mean_np(x, window):
    out = np.full(x.shape[0], np.nan)
    if x.shape[0] >= window:
        view = np.lib.stride_tricks.sliding_window_view(x, window)
        out[window - 1:] = view.mean(axis=1)
    return out


def _rolling_wma_np(x, window):
    out = np.full(x.shape[0], np.nan)
    if x.shape[0] >= window:
        weights = np.arange(1.0, window + 1.0)
        view = np.lib.stride_tricks.sliding_window_view(x, window)
        out[window - 1:] = view @ weights / weights.sum()
    return out


def _true_range_np(high, low, close):
    out = np.full(high.shape[0], np.nan)
    if high.shape[0] > 1:
        prev = close[:-1]
        out[1:] = np.maximum(
            high[1:] - low[1:],
            np.maximum(np.abs(high[1:] - prev), np.abs(low[1:] - prev)),
        )
    return out


def _atr_np(high, low, close, window):
    tr = _true_range_np(high, low, close)
    out = np.full(tr.shape[0], np.nan)
    if tr.shape[0] > window:
        view = np.lib.stride_tricks.sliding_window_view(tr[1:], window)
        out[window:] = view.mean(axis=1)
    return out


NUMPY_IMPL = {
    "max_drawdown": _max_drawdown_np,
    "underwater": _underwater_np,
    "episode_stats": _episode_stats_np,
    "rolling_mean": _rolling_mean_np,
    "rolling_wma": _rolling_wma_np,
    "true_range": _true_range_np,
    "atr": _atr_np,
}

_LOOP_IMPL = {
    "max_drawdown": _max_drawdown_loop,
    "underwater": _underwater_loop,
    "episode_stats": _episode_stats_loop,
    "rolling_mean": _rolling_mean_loop,
    "rolling_wma": _rolling_wma_loop,
    "true_range": _true_range_loop,
    "atr": _atr_loop,
}


def _build_numba_impl():
    from numba import njit

    return {name: njit(cache=True)(fn) for name, fn in _LOOP_IMPL.items()}


def _select_backend() -> str:
    forced = os.environ.get(_BACKEND_ENV, "").strip().lower()
    if forced == "numpy":
        return "numpy"
    if forced == "numba":
        return "numba"
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


KERNEL_BACKEND = _select_backend()
if KERNEL_BACKEND == "numba":
    _impl = _build_numba_impl()
else:
    _impl = NUMPY_IMPL

max_drawdown = _impl["max_drawdown"]
underwater = _impl["underwater"]
episode_stats = _impl["episode_stats"]
rolling_mean = _impl["rolling_mean"]
rolling_wma = _impl["rolling_wma"]
true_range = _impl["true_range"]
atr = _impl["atr"]


def implementations(backend: str) -> dict:
    """Return the kernel table for ``backend`` ("numpy" or "numba")."""
    if backend == "numpy":
        return NUMPY_IMPL
    if backend == "numba":
        return _build_numba_impl()
    raise ValueError(f"unknown kernel backend {backend!r}")
