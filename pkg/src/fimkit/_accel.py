"""Backend switch for the hot loops.

Set ``FIMKIT_NUMBA=0`` before import to force the pure-numpy path.
Numba is used when it is importable and not disabled.
"""

import os

_flag = os.environ.get("FIMKIT_NUMBA", "1").strip().lower()
_wanted = _flag not in ("0", "false", "no", "off")

try:
    if not _wanted:
        raise ImportError
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False
    _njit = None

BACKEND = "numba" if HAS_NUMBA else "numpy"


def njit(fn):
    """``numba.njit(cache=True)`` when available, identity otherwise."""
    if HAS_NUMBA:
        return _njit(cache=True)(fn)
    return fn
