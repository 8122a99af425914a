"""Kernel acceleration switch.

Hot numeric kernels are written as plain Python loops over numpy arrays and
compiled with numba's @njit by default.  Setting the environment variable
``WSNOPT_NUMBA=0`` (or numba being absent) selects the uncompiled fallback
path; both paths execute the same statements in the same order, so results
are bit-identical.
"""

import os

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but keep the fallback
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("WSNOPT_NUMBA", "1") != "0"


def maybe_njit(fn):
    """Compile fn with numba unless the fallback path is selected."""
    if USE_NUMBA:
        return _njit(cache=True)(fn)
    return fn
