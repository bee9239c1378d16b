"""Optional numba acceleration for the hot loops.

Kernels are written once as plain Python over numpy arrays.  ``kernel`` wraps
such a function so that both the compiled and the interpreted variant stay
reachable; which one runs by default is decided by the ``EVOSORT_BACKEND``
environment variable (``numba``, ``python`` or ``auto``).
"""

from __future__ import annotations

import os

try:
    import numba
    import numba.extending
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None

BACKENDS = ("auto", "numba", "python")


def default_backend() -> str:
    value = os.environ.get("EVOSORT_BACKEND", "auto").strip().lower()
    if value not in BACKENDS:
        raise ValueError(f"EVOSORT_BACKEND must be one of {BACKENDS}, got {value!r}")
    return value


def numba_available() -> bool:
    return numba is not None


def resolve_backend(backend: str | None) -> str:
    backend = default_backend() if backend is None else backend
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "auto":
        return "numba" if numba is not None else "python"
    if backend == "numba" and numba is None:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


def jitable(func):
    """Helper callable from both compiled kernels and plain Python."""
    if numba is None:
        return func
    return numba.extending.register_jitable(func)


class kernel:
    """A function with a lazily compiled numba twin."""

    def __init__(self, func):
        self.py_func = func
        self.__name__ = func.__name__
        self.__doc__ = func.__doc__
        self._compiled = None

    @property
    def compiled(self):
        if self._compiled is None:
            self._compiled = numba.njit(cache=True, nogil=True)(self.py_func)
        return self._compiled

    def select(self, backend: str | None = None):
        if resolve_backend(backend) == "numba":
            return self.compiled
        return self.py_func

    def __call__(self, *args, backend: str | None = None):
        return self.select(backend)(*args)
