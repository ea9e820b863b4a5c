"""Timing comparison between the jit-compiled hot loops and their fallbacks.

The package selects kernel implementations at import time: numba-jitted
loops when numba is importable, plain numpy/python otherwise, with
``FREQUC_NUMBA=0`` forcing the fallback.  This script times both
implementations of each kernel side by side and checks that they agree
numerically.

    python3 benchmarks/bench_kernels.py
    FREQUC_NUMBA=0 python3 benchmarks/bench_kernels.py   # fallback only
"""

import time

import numpy as np

from frequc._accel import HAS_NUMBA, jit_kernel, numba_enabled
from frequc.freqdyn import _rk4_py
from frequc.milp.simplex import (
    _pivot_update_loops,
    _pivot_update_numpy,
    _ratio_limits_loops,
    _ratio_limits_numpy,
)

REPEATS = 5


def best_time(fn, arg_sets):
    """Best wall time of ``fn`` over fresh argument sets."""
    best = float("inf")
    for args in arg_sets:
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_rk4(jitted):
    # one security check on the desk-scale system: 60 s at 0.1 ms steps
    args = (936.0, 120.0, 1100.0, 3.0, 900.0, 1e-4, 600_000)
    sets = [args] * REPEATS
    t_fast = best_time(jitted, sets) if jitted is not None else None
    t_slow = best_time(_rk4_py, sets[:2])
    agrees = None
    if jitted is not None:
        agrees = float(np.max(np.abs(jitted(*args) - _rk4_py(*args))))
    return "swing rk4 (600k steps)", t_fast, t_slow, agrees


def bench_pivot(jitted):
    rng = np.random.default_rng(7)
    tab = rng.standard_normal((800, 1600))
    tab[11, 23] = 2.0
    fresh = lambda: [(tab.copy(), 11, 23) for _ in range(REPEATS)]
    t_fast = best_time(jitted, fresh()) if jitted is not None else None
    t_slow = best_time(_pivot_update_numpy, fresh())
    agrees = None
    if jitted is not None:
        a, b = tab.copy(), tab.copy()
        jitted(a, 11, 23)
        _pivot_update_numpy(b, 11, 23)
        agrees = float(np.max(np.abs(a - b)))
    return "simplex pivot (800x1600)", t_fast, t_slow, agrees


def bench_ratio(jitted):
    rng = np.random.default_rng(11)
    m = 200_000
    direction = rng.standard_normal(m)
    x = rng.standard_normal(m)
    lb = x - rng.random(m)
    ub = x + rng.random(m)
    args = (direction, x, lb, ub, 1e-10, np.empty(m))
    sets = [args] * REPEATS
    t_fast = best_time(jitted, sets) if jitted is not None else None
    t_slow = best_time(_ratio_limits_numpy, sets)
    agrees = None
    if jitted is not None:
        out_a, out_b = np.empty(m), np.empty(m)
        jitted(direction, x, lb, ub, 1e-10, out_a)
        _ratio_limits_numpy(direction, x, lb, ub, 1e-10, out_b)
        finite = np.isfinite(out_a) & np.isfinite(out_b)
        agrees = float(np.max(np.abs(out_a[finite] - out_b[finite])))
        agrees = max(agrees, float(np.sum(np.isfinite(out_a) != finite)))
    return "ratio test (200k rows)", t_fast, t_slow, agrees


def main():
    active = numba_enabled()
    print(f"numba importable: {HAS_NUMBA}; jit path active: {active}")
    pairs = []
    if active:
        jit_rk4 = jit_kernel(_rk4_py)
        jit_pivot = jit_kernel(_pivot_update_loops)
        jit_ratio = jit_kernel(_ratio_limits_loops)
        # compile outside the timed region
        jit_rk4(936.0, 120.0, 1100.0, 3.0, 900.0, 1e-3, 10)
        jit_pivot(np.eye(4), 1, 1)
        jit_ratio(np.ones(4), np.ones(4), np.zeros(4), 2 * np.ones(4),
                  1e-10, np.empty(4))
    else:
        jit_rk4 = jit_pivot = jit_ratio = None
    pairs.append(bench_rk4(jit_rk4))
    pairs.append(bench_pivot(jit_pivot))
    pairs.append(bench_ratio(jit_ratio))

    print(f"{'kernel':<28} {'jit [ms]':>10} {'fallback [ms]':>14} "
          f"{'speedup':>8}  max |diff|")
    for name, t_fast, t_slow, agrees in pairs:
        fast = f"{1e3 * t_fast:10.2f}" if t_fast is not None else "         -"
        ratio = f"{t_slow / t_fast:8.1f}" if t_fast else "       -"
        diff = f"{agrees:.2e}" if agrees is not None else "-"
        print(f"{name:<28} {fast} {1e3 * t_slow:14.2f} {ratio}  {diff}")


if __name__ == "__main__":
    main()
