"""Optional numba acceleration.

Hot kernels are written so that the same source runs under ``numba.njit`` or
as plain numpy.  Set ``STULA_DISABLE_NUMBA=1`` (before import) to force the
pure-numpy path; it is also used automatically when numba is not installed.
"""

from __future__ import annotations

import os

_disabled = os.environ.get("STULA_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _disabled:
        raise ImportError
    import numba as _numba

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover - depends on environment
    _numba = None
    NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def maybe_njit(func=None, *, cache=True, **kwargs):
    """``numba.njit`` when acceleration is on, identity otherwise.

    Module-level kernels are cached on disk; pass ``cache=False`` for closures.
    """

    def wrap(f):
        if NUMBA_ENABLED:
            return _numba.njit(cache=cache, **kwargs)(f)
        return f

    if func is not None:
        return wrap(func)
    return wrap


def is_compiled(func) -> bool:
    """True if ``func`` is a numba dispatcher usable inside other kernels."""
    return NUMBA_ENABLED and hasattr(func, "py_func") and hasattr(func, "signatures")


__all__ = ["BACKEND", "NUMBA_ENABLED", "is_compiled", "maybe_njit"]
