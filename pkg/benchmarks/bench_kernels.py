"""Benchmark the numba kernels against the pure-numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--sizes 1000,10000,100000]

The same kernels power drawdown analytics and the rolling indicators, so
this is the speedup you get (or lose) by flipping SABER_KERNELS.
"""

import argparse
import time

import numpy as np

from saber import _kernels


def make_inputs(n, rng):
    closes = 100.0 * np.exp(np.cumsum(rng.normal(0.0002, 0.02, n)))
    high = closes * (1 + np.abs(rng.normal(0, 0.004, n)))
    low = closes * (1 - np.abs(rng.normal(0, 0.004, n)))
    under = _kernels.NUMPY_IMPL["underwater"](closes)
    return closes, high, low, under


CASES = (
    ("max_drawdown", lambda impl, c, h, l, u: impl["max_drawdown"](c)),
    ("underwater", lambda impl, c, h, l, u: impl["underwater"](c)),
    ("episode_stats", lambda impl, c, h, l, u: impl["episode_stats"](u)),
    ("rolling_mean(20)", lambda impl, c, h, l, u: impl["rolling_mean"](c, 20)),
    ("rolling_wma(20)", lambda impl, c, h, l, u: impl["rolling_wma"](c, 20)),
    ("atr(14)", lambda impl, c, h, l, u: impl["atr"](h, l, c, 14)),
)


def bench(fn, impl, inputs, repeats):
    fn(impl, *inputs)  # warm-up (and JIT compile for the numba table)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(impl, *inputs)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="1000,10000,100000")
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    numpy_impl = _kernels.implementations("numpy")
    try:
        numba_impl = _kernels.implementations("numba")
    except ImportError:
        print("numba not installed; nothing to compare")
        return

    rng = np.random.Generator(np.random.PCG64(99))
    print(f"{'kernel':<18} {'n':>8} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for n in sizes:
        inputs = make_inputs(n, rng)
        for name, fn in CASES:
            t_np = bench(fn, numpy_impl, inputs, args.repeats)
            t_nb = bench(fn, numba_impl, inputs, args.repeats)
            print(f"{name:<18} {n:>8} {t_np * 1e6:>10.1f}us {t_nb * 1e6:>10.1f}us "
                  f"{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
