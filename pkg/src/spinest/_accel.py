"""Kernel acceleration switch.

Hot loops are written twice: a numba ``@njit`` version and a vectorized numpy
version.  Set ``SPINEST_NUMBA=0`` in the environment to force the numpy path
(numba is also skipped automatically when it cannot be imported).
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("SPINEST_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged."""
    if NUMBA_AVAILABLE:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def select(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
