"""Backend switch for the compiled kernels.

Set ``MVM_DISABLE_NUMBA=1`` to force the pure-numpy path (useful for
debugging, coverage runs, or platforms without a working LLVM).
"""
import os

_flag = os.environ.get("MVM_DISABLE_NUMBA", "").strip().lower()
NUMBA_REQUESTED = _flag not in ("1", "true", "yes", "on")

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


USE_NUMBA = NUMBA_REQUESTED and NUMBA_AVAILABLE

__all__ = ["njit", "NUMBA_AVAILABLE", "USE_NUMBA"]
