"""Backend selection for the max-coverage kernel.

The compiled extension is used when it imports and the masks fit in 64 bits;
set ``ASRSIM_PURE_PYTHON=1`` to force the Python implementation.
"""
from __future__ import annotations

import os

from . import _coverage_py

try:
    if os.environ.get("ASRSIM_PURE_PYTHON"):
        raise ImportError("pure-Python backend forced")
    from . import _coverage as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def coverage_profile(masks, max_sets: int, backend: str | None = None):
    backend = backend or BACKEND
    if backend == "cython" and _compiled is None:
        raise RuntimeError("compiled coverage kernel is not available")
    if backend == "cython" and max_sets <= 64 and all(m < (1 << 64) for m in masks):
        return _compiled.coverage_profile(masks, max_sets)
    return _coverage_py.coverage_profile(masks, max_sets)
