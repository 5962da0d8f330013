"""Stepper backend selection and operator packing.

The compiled extension is preferred; a numpy/scipy fallback with the
same signatures loads when the build is unavailable. Both integrate the
same equations; `python -m darklink.benchmark` compares their speed.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

try:
    from . import _stepper as _impl

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - exercised only without the ext
    from . import _fallback as _impl

    BACKEND = "python"

from . import _fallback


def get_backend() -> str:
    return BACKEND


def get_impl(name: str | None = None):
    """The active stepper module, or a specific one for benchmarking."""
    if name is None:
        return _impl
    if name == "python":
        return _fallback
    if name == "compiled":
        if BACKEND != "compiled":
            raise RuntimeError("compiled stepper is not available")
        return _impl
    raise ValueError(f"unknown backend {name!r}")


def csr_triple(dense: np.ndarray):
    """(data, indices, indptr) arrays for the compiled stepper."""
    m = sp.csr_matrix(dense)
    m.sort_indices()
    return (
        np.ascontiguousarray(m.data, dtype=np.complex128),
        np.ascontiguousarray(m.indices, dtype=np.int32),
        np.ascontiguousarray(m.indptr, dtype=np.int32),
    )
