"""Benchmark: compiled kernels vs the pure-python fallback.

Times the two hot paths on representative workloads: the split-finding LP
(simplex pivoting dominates) and L1 coordinate descent.  Run after building
the extension:

    python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from hpsplit._kernels import _fallback

try:
    from hpsplit._kernels import _speedups
except ImportError:
    _speedups = None

from hpsplit import _kernels
from hpsplit.dataset import DataSet
from hpsplit.splitter import find_hyperplane


def split_lp_workload(n, k, seed=0):
    rng = np.random.default_rng(seed)
    w_star = rng.normal(size=k)
    X = rng.uniform(size=(n, k))
    s = (X - 0.5) @ w_star
    a = (s - s.min()) / (s.max() - s.min())
    noise = rng.normal(scale=0.05, size=n)
    a = np.clip(a + noise, 0, 1)
    a[np.argmin(a)] = 0.0
    a[np.argmax(a)] = 1.0
    return DataSet([f"c{i}" for i in range(n)], X, a,
                   [f"d{i}" for i in range(k)])


def time_simplex(backend, ds, theta=0.45, repeats=3):
    _kernels.simplex_iterate = backend.simplex_iterate
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        find_hyperplane(ds, theta)
        best = min(best, time.perf_counter() - t0)
    return best


def time_lasso(backend, n=400, k=60, lam=1e-3, repeats=3, seed=1):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(rng.uniform(size=(n, k)))
    y = np.ascontiguousarray(X @ rng.normal(size=k) * 0.1 + rng.uniform(size=n))
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        backend.lasso_sweeps(X, y, lam, 1e-8, 100000)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rows = []
    ds_small = split_lp_workload(150, 8)
    ds_big = split_lp_workload(400, 12, seed=2)
    workloads = [
        ("split LP n=150 K=8", lambda be: time_simplex(be, ds_small)),
        ("split LP n=400 K=12", lambda be: time_simplex(be, ds_big)),
        ("lasso n=400 K=60", time_lasso),
    ]
    print(f"{'workload':<24} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for name, fn in workloads:
        t_py = fn(_fallback)
        if _speedups is not None:
            t_cy = fn(_speedups)
            rows.append((name, t_py, t_cy))
            print(f"{name:<24} {t_py:>9.3f}s {t_cy:>9.3f}s {t_py / t_cy:>7.1f}x")
        else:
            print(f"{name:<24} {t_py:>9.3f}s {'(not built)':>10}")
    _kernels.simplex_iterate = (_speedups or _fallback).simplex_iterate


if __name__ == "__main__":
    main()
