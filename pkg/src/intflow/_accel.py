"""Backend selection for the O(N^2) pair kernels.

The numba kernels are used by default. Setting ``INTFLOW_DISABLE_NUMBA=1``
in the environment (or calling :func:`set_backend`) routes every hot loop
through the vectorised numpy fallback instead.
"""

from __future__ import annotations

import contextlib
import os
import warnings

# an old system TBB only disables that threading layer; numba falls back to omp/workqueue
warnings.filterwarnings("ignore", message="The TBB threading layer", module="numba")

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_FALSY = {"", "0", "false", "no", "off"}


def _env_disabled() -> bool:
    return os.environ.get("INTFLOW_DISABLE_NUMBA", "0").strip().lower() not in _FALSY


_use_numba = numba is not None and not _env_disabled()


def numba_available() -> bool:
    return numba is not None


def backend() -> str:
    return "numba" if _use_numba else "numpy"


def set_backend(name: str) -> None:
    global _use_numba
    if name == "numba":
        if numba is None:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")


@contextlib.contextmanager
def use_backend(name: str):
    previous = backend()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def set_threads(count: int) -> None:
    """Set the worker count for parallel kernels; 0 means all cores."""
    if numba is None:
        return
    if count < 0:
        raise ValueError("thread count must be >= 0")
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(limit if count == 0 else min(count, limit))


def kernel(name: str):
    """Return the named pair kernel from the active backend."""
    if _use_numba:
        from . import _numba_kernels as impl
    else:
        from . import _numpy_kernels as impl
    return getattr(impl, name)
