"""Backend selection for the hot kernels.

Set ``SMARTCUP_NUMBA=0`` in the environment before import to force the
pure-numpy code paths (useful for debugging, or where numba is unavailable).
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("SMARTCUP_NUMBA", "1") != "0"


def njit(fn):
    """``numba.njit(cache=True)`` when enabled, else the function unchanged."""
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend():
    return "numba" if USE_NUMBA else "numpy"
