"""Backend selection for the numeric kernels.

Kernels are compiled with numba when it is importable, unless the
environment variable ``ZMPGAIT_DISABLE_JIT`` is set to a truthy value,
in which case the pure-numpy implementations are used instead.
"""

import logging
import os

LOG = logging.getLogger(__name__)

_FALSY = {"", "0", "false", "no", "off"}

JIT_DISABLED = os.environ.get("ZMPGAIT_DISABLE_JIT", "").strip().lower() not in _FALSY

try:
    from numba import njit as _numba_njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    _numba_njit = None
    HAS_NUMBA = False

USE_JIT = HAS_NUMBA and not JIT_DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when numba is available, otherwise an identity decorator."""
    if HAS_NUMBA:
        return _numba_njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap


def backend_name():
    return "numba" if USE_JIT else "numpy"
