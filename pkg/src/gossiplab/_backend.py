"""Kernel backend selection.

The compiled Cython module ``gossiplab._kernels`` is used when it imports;
otherwise the list-based pure-Python twin ``gossiplab._pykernels`` takes over.
Set ``GOSSIPLAB_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

_MODULES = {"cython": "gossiplab._kernels", "python": "gossiplab._pykernels"}


def load(name: str) -> ModuleType:
    """Import one backend by name; raises ImportError if it is unavailable."""
    try:
        return importlib.import_module(_MODULES[name])
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(_MODULES)}") from None


def available() -> list[str]:
    names = []
    for name in _MODULES:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select() -> tuple[str, ModuleType]:
    forced = os.environ.get("GOSSIPLAB_BACKEND", "").strip().lower()
    if forced:
        return forced, load(forced)
    try:
        return "cython", load("cython")
    except ImportError:
        return "python", load("python")


NAME, kernels = _select()


def get(backend: str | ModuleType | None = None) -> ModuleType:
    if backend is None:
        return kernels
    if isinstance(backend, ModuleType):
        return backend
    return load(backend)
