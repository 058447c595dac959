#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure-Python fallback.

Runs each hot kernel on simulated streams of increasing size and prints a
table of per-call times plus the speedup.  Uses both backends in one
process (the selection wrapper is bypassed on purpose).

    python3 benchmarks/bench_backends.py [--sizes 1000,10000,100000]
"""
import argparse
import math
import time

import numpy as np

from hawkeslob import HawkesModel, SimConfig, simulate_thinning
from hawkeslob._backends import pykernels

try:
    from hawkeslob._backends import _ckernels
except ImportError:
    _ckernels = None


def timeit(fn, *args, repeat=5):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def stream_of_size(n_target):
    model = HawkesModel.exponential(0.5, 1.2, 1.5)
    horizon = n_target / 2.5
    return simulate_thinning(model, SimConfig(horizon=horizon, seed=1234))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1000,10000,100000")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _ckernels is None:
        print("compiled backend not built; run pip install -e . first")
        return

    mu = np.array([0.5])
    alpha = np.array([[1.2]])
    beta = np.array([[1.5]])

    print(f"{'kernel':<28}{'n':>9}{'python':>12}{'compiled':>12}{'speedup':>9}")
    for n in sizes:
        s = stream_of_size(n)
        times = np.ascontiguousarray(s.times)
        marks = np.ascontiguousarray(s.marks)
        dims = np.zeros(len(s), dtype=np.int64)
        cases = [
            ("exp_recursion", (times, marks, 1.5)),
            ("exp_loglik", (times, dims, marks, mu, alpha, beta, s.horizon)),
            (
                "exp_compensator_at_events",
                (times, dims, marks, 0.5, alpha[0], beta[0], 0),
            ),
        ]
        if n <= 20_000:
            cases.append(
                ("powerlaw_loglik_1d",
                 (times, marks, 0.5, 0.6, 0.4, 2.5, s.horizon, 20.0)),
            )
        for name, call_args in cases:
            t_py = timeit(getattr(pykernels, name), *call_args)
            t_c = timeit(getattr(_ckernels, name), *call_args)
            print(
                f"{name:<28}{len(s):>9}{t_py * 1e3:>10.3f}ms{t_c * 1e3:>10.3f}ms"
                f"{t_py / t_c:>8.1f}x"
            )


if __name__ == "__main__":
    main()
