"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy fallback in ``_pykernels``.  Set ``RGPM_BACKEND=python`` to force the
fallback, or call :func:`set_backend` at runtime.
"""
from __future__ import annotations

import os
from contextlib import contextmanager
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels

kernels: ModuleType = _BACKENDS["compiled" if _ckernels is not None else "python"]
if os.environ.get("RGPM_BACKEND", "").lower() == "python":
    kernels = _pykernels


def available() -> list[str]:
    return sorted(_BACKENDS)


def name() -> str:
    return "compiled" if kernels is _ckernels else "python"


def set_backend(which: str) -> None:
    global kernels
    try:
        kernels = _BACKENDS[which]
    except KeyError:
        raise ValueError(f"backend {which!r} not available; choose from {available()}") from None


@contextmanager
def using(which: str):
    previous = name()
    set_backend(which)
    try:
        yield
    finally:
        set_backend(previous)
