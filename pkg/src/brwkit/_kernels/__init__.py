"""Hot simulation kernels.

The compiled extension ``_core`` is used when it imports; otherwise the
pure-Python twin ``_pycore`` is used.  Set ``BRWKIT_PURE_PYTHON=1`` to force
the fallback.  Both backends draw from the generator in the same order and
return identical results.
"""
from __future__ import annotations

import os

from . import _pycore

if os.environ.get("BRWKIT_PURE_PYTHON") == "1":
    core = _pycore
else:
    try:
        from . import _core as core
    except ImportError:  # extension not built
        core = _pycore

BACKEND = core.BACKEND
OK = _pycore.OK
WINDOW_EXIT = _pycore.WINDOW_EXIT
CAPPED = _pycore.CAPPED
CEMETERY = _pycore.CEMETERY
JUMP = _pycore.JUMP
DEATH = _pycore.DEATH
ANNIHILATE = _pycore.ANNIHILATE


def backends() -> dict:
    """All importable backends by name."""
    out = {"python": _pycore}
    try:
        from . import _core

        out["cython"] = _core
    except ImportError:
        pass
    return out
