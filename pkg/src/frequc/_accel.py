"""Optional numba acceleration for the numeric hot loops.

The swing integrator and the simplex pivot kernels are plain numpy functions
that get wrapped in ``numba.njit`` when numba is importable.  Setting the
environment variable ``FREQUC_NUMBA=0`` forces the pure-numpy path, which is
what the benchmark in ``benchmarks/bench_kernels.py`` compares against.
"""

from __future__ import annotations

import os

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    njit = None
    HAS_NUMBA = False


def numba_enabled() -> bool:
    """True when kernels should be jitted (numba present and not disabled)."""
    if os.environ.get("FREQUC_NUMBA", "1") == "0":
        return False
    return HAS_NUMBA


def jit_kernel(pyfunc):
    """Return the jitted version of ``pyfunc`` if enabled, else ``pyfunc``."""
    if numba_enabled():
        return njit(cache=True)(pyfunc)
    return pyfunc
