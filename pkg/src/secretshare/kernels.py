"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``SECRETSHARE_BACKEND``
to ``python`` to force the numpy fallback (or ``compiled`` to require the
extension).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_choice = os.environ.get("SECRETSHARE_BACKEND", "auto").lower()
if _choice not in ("auto", "compiled", "python"):
    raise ImportError(f"SECRETSHARE_BACKEND must be auto, compiled or python, not {_choice!r}")

_impl = _kernels_py
if _choice != "python":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND


def get_backend(name: str | None = None):
    """Kernel module by name (``compiled`` or ``python``); default is the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def enumerate_counts(contrib: np.ndarray) -> np.ndarray:
    return _impl.enumerate_counts(np.ascontiguousarray(contrib, dtype=np.intc))


def propagate(kinds1, params1, kinds2, params2, source, meas_kind: int) -> np.ndarray:
    return _impl.propagate(
        np.ascontiguousarray(kinds1, dtype=np.int8),
        np.ascontiguousarray(params1, dtype=np.float64),
        np.ascontiguousarray(kinds2, dtype=np.int8),
        np.ascontiguousarray(params2, dtype=np.float64),
        np.ascontiguousarray(source, dtype=np.complex128),
        int(meas_kind),
    )
