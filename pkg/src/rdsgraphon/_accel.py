"""
Switch between numba-compiled kernels and their pure-numpy counterparts.

Set ``RDSGRAPHON_DISABLE_JIT=1`` in the environment before import to force
the numpy paths (useful for debugging, or where numba is unavailable).
Both paths are always importable so they can be compared directly.
"""

import os

_DISABLED = os.environ.get("RDSGRAPHON_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    from numba import njit as _numba_njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED

JIT_OPTIONS = {"nogil": True, "cache": True}


def njit(func):
    """Compile ``func`` with numba when available; otherwise return it unchanged.

    The fallback keeps the decorated function callable as plain Python, so the
    numba variant of every kernel can still be exercised (slowly) in tests.
    """
    if HAVE_NUMBA:
        return _numba_njit(**JIT_OPTIONS)(func)
    return func


def select(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl


def backend():
    return "numba" if USE_NUMBA else "numpy"
