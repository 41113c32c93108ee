"""Blend-kernel backend selection.

Two interchangeable implementations exist: the compiled extension (fast,
OpenMP over tiles) and the pure numpy kernels (portable, the readable
reference).  Selection order: an explicit `backend=` argument, then the
SKEWSPLAT_BACKEND environment variable ("cython" or "numpy"), then the
compiled extension when it is importable and carries the real kernels.
"""

from __future__ import annotations

import os

from . import _cpu

_NAMES = ("cython", "numpy")


def _compiled():
    try:
        from . import _core
    except ImportError:
        return None
    if getattr(_core, "KERNELS", 0):
        return _core
    return None


def active_backend(override: str | None = None) -> str:
    name = override or os.environ.get("SKEWSPLAT_BACKEND")
    if name is not None:
        if name not in _NAMES:
            raise ValueError(f"unknown backend {name!r}; expected one of {_NAMES}")
        if name == "cython" and _compiled() is None:
            raise RuntimeError("compiled backend requested but the extension "
                               "lacks kernels; rebuild or use SKEWSPLAT_BACKEND=numpy")
        return name
    return "cython" if _compiled() is not None else "numpy"


def kernels(override: str | None = None):
    """Module exposing forward_tiles / backward_tiles for the chosen backend."""
    return _compiled() if active_backend(override) == "cython" else _cpu
