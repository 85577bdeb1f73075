"""Optional numba acceleration.

Hot kernels are written twice: a loop version decorated with :func:`njit`
and a vectorized numpy version. :func:`select` picks one at import time.

Set ``INCOMEQR_DISABLE_NUMBA=1`` to force the numpy path. When numba is not
installed the numpy path is used and ``njit`` becomes a no-op, so the loop
kernels still run (slowly) as plain Python.
"""

import os

_FLAG = "INCOMEQR_DISABLE_NUMBA"

try:  # pragma: no cover - depends on environment
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get(_FLAG, "").strip().lower() not in (
    "1",
    "true",
    "yes",
    "on",
)


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or the identity decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)

    def wrapper(func):
        return func

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrapper


def select(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
