"""Throughput comparison of the numba and numpy kernel backends.

Runs every batch kernel on identical draws and reports profiles/second per
backend plus the speedup.  Usage:

    python benchmarks/bench_kernels.py [--profiles 200000] [--n 64] [--m 2]
"""

import argparse
import math
import time

import numpy as np

from auctioncc.kernels import numpy_backend

try:
    from auctioncc.kernels import numba_backend
except ImportError:
    numba_backend = None


def make_inputs(profiles, n, m, seed=0):
    T = 1.5 * math.sqrt(n * m)
    gen = np.random.default_rng(seed)
    u = gen.random((profiles, n, m))
    values = np.minimum(1.0 / (1.0 - u), T)
    raw = 1.0 / (1.0 - gen.random((profiles, n, m)))
    tie_u = gen.random((profiles, m))
    return values, raw, tie_u, T


def bench(fn, *args, repeats=3):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--profiles", type=int, default=200_000)
    parser.add_argument("--n", type=int, default=64)
    parser.add_argument("--m", type=int, default=2)
    args = parser.parse_args()

    values, raw, tie_u, T = make_inputs(args.profiles, args.n, args.m)
    low = args.m * args.n / T
    a, b = 0.26, 0.019
    L = math.sqrt(args.n * args.m)

    cases = [
        ("spa_reserve_batch", lambda be: be.spa_reserve_batch(values, T)),
        (
            "naive_lna_batch",
            lambda be: be.naive_lna_batch(values, T, low, 0.5, tie_u),
        ),
        ("nsn_batch", lambda be: be.nsn_batch(values, a, b, T, low)),
        ("bundle_batch", lambda be: be.bundle_batch(raw)),
        ("cdw_batch", lambda be: be.cdw_batch(values, T, True)),
        ("kfa_batch", lambda be: be.kfa_batch(raw, math.inf, L)),
    ]

    backends = [("numpy", numpy_backend)]
    if numba_backend is not None:
        # trigger JIT compilation outside the timed region
        for _, fn in cases:
            fn(numba_backend)
        backends.append(("numba", numba_backend))
    else:
        print("numba backend unavailable; timing numpy only")

    print(
        f"profiles={args.profiles} n={args.n} m={args.m} "
        f"({args.profiles * args.n * args.m / 1e6:.1f}M draws)"
    )
    header = f"{'kernel':<18}" + "".join(f"{name + ' (s)':>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, fn in cases:
        times = [bench(fn, be) for _, be in backends]
        line = f"{name:<18}" + "".join(f"{t:>12.4f}" for t in times)
        if len(times) == 2:
            line += f"{times[0] / times[1]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
