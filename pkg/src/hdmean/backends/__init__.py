"""Backend selection for the numerical kernels.

Two interchangeable implementations of the same five-function contract:

* ``numba``: JIT-compiled loops, the default when numba imports cleanly.
* ``numpy``: vectorized pure-NumPy fallback, always available.

The active backend is resolved once, lazily, from the ``HDMEAN_BACKEND``
environment variable (``numba``, ``numpy``, or ``auto``). Call
``get_backend(name)`` to grab a specific one at runtime, e.g. for
benchmarking the two against each other.
"""

from __future__ import annotations

import os
import warnings
from types import ModuleType

from ..errors import HdmeanError

_ENV_VAR = "HDMEAN_BACKEND"
_CHOICES = ("auto", "numba", "numpy")

_loaded: dict[str, ModuleType] = {}
_active: ModuleType | None = None


def _load(name: str) -> ModuleType:
    if name not in _loaded:
        if name == "numpy":
            from . import numpy_backend as mod
        elif name == "numba":
            try:
                from . import numba_backend as mod
            except ImportError as exc:
                raise HdmeanError(
                    "backend 'numba' requested but numba is not importable"
                ) from exc
        else:
            raise HdmeanError(f"unknown backend {name!r}, expected one of {_CHOICES}")
        _loaded[name] = mod
    return _loaded[name]


def get_backend(name: str | None = None) -> ModuleType:
    """Return a backend module by name, or the active one if name is None."""
    if name is None:
        return active_backend()
    if name == "auto":
        return _resolve_auto()
    return _load(name)


def _resolve_auto() -> ModuleType:
    try:
        return _load("numba")
    except HdmeanError:
        warnings.warn(
            "numba is unavailable, falling back to the pure-NumPy backend",
            RuntimeWarning,
            stacklevel=3,
        )
        return _load("numpy")


def active_backend() -> ModuleType:
    """Resolve (once) and return the default backend for this process."""
    global _active
    if _active is None:
        name = os.environ.get(_ENV_VAR, "auto").strip().lower()
        if name not in _CHOICES:
            raise HdmeanError(
                f"{_ENV_VAR}={name!r} is invalid, expected one of {_CHOICES}"
            )
        _active = _resolve_auto() if name == "auto" else _load(name)
    return _active


__all__ = ["active_backend", "get_backend"]
