"""Backend selection for the numeric kernels.

Kernels are compiled with numba when it is importable and the environment
variable ``CURVSCAPE_DISABLE_NUMBA`` is unset (or falsy). Otherwise the
pure-numpy implementations in :mod:`curvscape.kernels` are used.
"""

from __future__ import annotations

import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested() -> bool:
    return os.environ.get("CURVSCAPE_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_requested()


def njit(fn):
    """Compile ``fn`` in nopython mode, or return it untouched without numba."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)
