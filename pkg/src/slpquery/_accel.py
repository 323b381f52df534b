"""Backend switch for the integer kernels.

Kernels are written once as plain Python over numpy arrays. When numba is
importable and ``SLPQUERY_NUMBA`` is not set to ``0``, they are compiled with
``numba.njit``; otherwise the same functions run interpreted.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("SLPQUERY_NUMBA", "1").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

USE_NUMBA: bool = _numba is not None and _FLAG not in ("0", "false", "no", "off")
BACKEND: str = "numba" if USE_NUMBA else "numpy"


def jit(fn):
    """Compile ``fn`` in nopython mode when the numba backend is active."""
    if USE_NUMBA:
        return _numba.njit(cache=True, nogil=True)(fn)
    return fn
