"""Optional numba acceleration.

Kernels are written once in a numba-compatible subset of Python. When numba
is importable and ``QCOEX_DISABLE_NUMBA`` is unset (or ``0``), they are
compiled with ``@njit``; otherwise callers use the pure-numpy fallbacks.
"""
import os

_flag = os.environ.get("QCOEX_DISABLE_NUMBA", "0").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")

try:
    if DISABLED:
        raise ImportError
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - depends on environment
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


def backend():
    return "numba" if NUMBA_AVAILABLE else "numpy"
