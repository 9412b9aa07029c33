"""Kernel backend selection.

The sequential GRU recurrence is the one loop numpy cannot vectorize, so it
has a numba-jitted implementation next to the plain-numpy reference. The
backend is picked once at import time:

    SAFRLM_BACKEND=numba   force the jitted kernels (error if numba missing)
    SAFRLM_BACKEND=numpy   force the pure-numpy fallback
    unset                  numba when importable, numpy otherwise

``benchmarks/bench_kernels.py`` times the two against each other.
"""

import os

from . import gru_numpy

try:
    from . import gru_numba
    HAS_NUMBA = True
except ImportError:
    gru_numba = None
    HAS_NUMBA = False

_requested = os.environ.get("SAFRLM_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"SAFRLM_BACKEND={_requested!r} not recognized (use 'numba' or 'numpy')"
    )
if _requested == "numba" and not HAS_NUMBA:
    raise RuntimeError("SAFRLM_BACKEND=numba but numba is not importable")

if _requested == "numpy" or (not _requested and not HAS_NUMBA):
    BACKEND = "numpy"
    _impl = gru_numpy
else:
    BACKEND = "numba"
    _impl = gru_numba

gru_recurrence_forward = _impl.gru_recurrence_forward
gru_recurrence_backward = _impl.gru_recurrence_backward

__all__ = [
    "BACKEND",
    "HAS_NUMBA",
    "gru_numba",
    "gru_numpy",
    "gru_recurrence_backward",
    "gru_recurrence_forward",
]
