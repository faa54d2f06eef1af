"""Timing comparison of the numba and numpy kernel paths."""
import time

import numpy as np

from . import _kernels
from .rng import SeededRng


def _best_ms(fn, args, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return 1e3 * best


def _cases(n, rng):
    d, R = 4, min(4, n)
    dims = np.full(d, n, dtype=np.int64)
    stack = rng.standard_normal((d * n, R))
    sig = rng.standard_normal(R)
    flat = rng.standard_normal(n ** d)
    a3 = np.asfortranarray(flat.reshape((n, n, n ** 2), order="F"))
    cost = rng.uniform(0.0, 1.0, (4 * n, 4 * n))
    return {
        "contract3": (a3, stack[:n, 0].copy()),
        "cp_full": (sig, stack, dims),
        "mttkrp": (flat, dims, stack, 1),
        "hungarian": (cost,),
    }


def run_benchmark(sizes=(6, 10, 14), reps=5, seed=0):
    """One row per (kernel, n): best-of-``reps`` wall time per backend and the
    largest absolute difference between their outputs."""
    rows = []
    for n in sizes:
        cases = _cases(int(n), SeededRng(seed).stream(int(n)))
        for name, args in cases.items():
            impls = _kernels.IMPLEMENTATIONS[name]
            ref = np.asarray(impls["numpy"](*args), dtype=np.float64)
            row = {"kernel": name, "n": int(n), "numpy_ms": _best_ms(impls["numpy"], args, reps)}
            if impls["numba"] is not None:
                out = np.asarray(impls["numba"](*args), dtype=np.float64)  # compiles on first call
                row["numba_ms"] = _best_ms(impls["numba"], args, reps)
                row["max_abs_diff"] = float(np.max(np.abs(out - ref)))
            else:
                row["numba_ms"] = float("nan")
                row["max_abs_diff"] = float("nan")
            row["speedup"] = row["numpy_ms"] / row["numba_ms"] if row["numba_ms"] > 0 else float("nan")
            rows.append(row)
    return rows
