"""Pick the compiled kernel when importable, the numpy one otherwise.

Set ``DEBATENET_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _fallback

try:
    if os.environ.get("DEBATENET_PURE_PYTHON"):
        raise ImportError("pure python requested")
    from . import _kernels
except ImportError:
    _kernels = None

BACKENDS = {"python": _fallback}
if _kernels is not None:
    BACKENDS["cython"] = _kernels

DEFAULT = "cython" if _kernels is not None else "python"


def get(name: str | None = None):
    name = DEFAULT if name in (None, "auto") else name
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
