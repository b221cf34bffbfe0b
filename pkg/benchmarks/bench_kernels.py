"""Benchmark the compiled solver kernels against the numpy fallback.

Times the three per-iteration hot kernels on a grid of (block size, row
count) shapes, then compares end-to-end weight computations by re-running
this interpreter with CONVEXWEIGHT_PURE_PYTHON=1.

Run:  python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np


def time_call(fn, *args, repeat=50):
    fn(*args)  # warm up
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels():
    from convexweight.solver.kernels import (HAVE_COMPILED, _numpy_impl)
    if HAVE_COMPILED:
        from convexweight.solver.kernels import _cykernels as fast
    else:
        print("compiled kernels unavailable; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16} {'n':>4} {'m':>5} {'numpy':>10} {'cython':>10} "
          f"{'speedup':>8}")
    for n, m in [(4, 8), (8, 24), (8, 96), (16, 64), (32, 64), (64, 32)]:
        a = rng.normal(size=(m, n, n))
        a = np.ascontiguousarray((a + a.transpose(0, 2, 1)) / 2)
        w = rng.normal(size=(n, n))
        w = np.ascontiguousarray(w @ w.T + np.eye(n))
        y = rng.normal(size=m)
        x = np.ascontiguousarray(w / np.trace(w))
        for name, args in [("gram_conjugated", (a, w)),
                           ("weighted_sum", (a, y)),
                           ("inner_products", (a, x))]:
            t_np = time_call(getattr(_numpy_impl, name), *args)
            t_cy = time_call(getattr(fast, name), *args)
            print(f"{name:<16} {n:>4} {m:>5} {t_np*1e6:>9.1f}u "
                  f"{t_cy*1e6:>9.1f}u {t_np/t_cy:>7.2f}x")


def bench_end_to_end():
    from convexweight.solver.kernels import IMPLEMENTATION
    from convexweight.devices import random_device
    from convexweight.freesets import FreeSetSpec
    from convexweight.weight import compute_weight

    t0 = time.perf_counter()
    for seed in range(10):
        dev = random_device("measurement-assemblage", 2, n_outcomes=2,
                            n_settings=2, seed=seed)
        compute_weight(dev, FreeSetSpec("jm"))
    for seed in range(5):
        dev = random_device("channel-choi", (2, 2), seed=seed)
        compute_weight(dev, FreeSetSpec("eb-ppt"))
    elapsed = time.perf_counter() - t0
    print(f"end-to-end [{IMPLEMENTATION:>6}]: 15 weight computations "
          f"in {elapsed:.3f}s")


if __name__ == "__main__":
    if os.environ.get("CONVEXWEIGHT_PURE_PYTHON"):
        bench_end_to_end()
    else:
        bench_kernels()
        print()
        bench_end_to_end()
        env = dict(os.environ, CONVEXWEIGHT_PURE_PYTHON="1")
        subprocess.run([sys.executable, __file__], env=env, check=True)
