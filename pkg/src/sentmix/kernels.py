"""Dense-matrix kernels every other module builds on.

Two interchangeable backends implement the same contracts: numba-compiled
loops (:mod:`sentmix.kernels_numba`) and pure numpy
(:mod:`sentmix.kernels_numpy`). Selection happens once at import time via
the ``SENTMIX_BACKEND`` environment variable:

    SENTMIX_BACKEND=numba   require numba, fail if unavailable
    SENTMIX_BACKEND=numpy   force the pure-numpy path
    SENTMIX_BACKEND=auto    numba when importable, numpy otherwise (default)

All kernels take and return C-contiguous float64 arrays; validation and
coercion live here so both backends see identical inputs.
"""

from __future__ import annotations

import os

import numpy as np

from .kernels_numpy import LAYER_NORM_EPS

__all__ = [
    "BACKEND",
    "LAYER_NORM_EPS",
    "matmul",
    "softmax_rows",
    "layer_norm",
    "l2_normalize_rows",
]


def _load_backend():
    requested = os.environ.get("SENTMIX_BACKEND", "auto").strip().lower()
    if requested not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"SENTMIX_BACKEND must be 'numba', 'numpy' or 'auto', got {requested!r}"
        )
    if requested in ("auto", "numba"):
        try:
            from . import kernels_numba as impl

            return "numba", impl
        except ImportError:
            if requested == "numba":
                raise
    from . import kernels_numpy as impl

    return "numpy", impl


BACKEND, _impl = _load_backend()


def _as_matrix(x, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d matrix, got shape {arr.shape}")
    return arr


def _as_vector(x, length: int, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != length:
        raise ValueError(f"{name} must be a vector of length {length}, got shape {arr.shape}")
    return arr


def matmul(a, b) -> np.ndarray:
    """Dense product a @ b; the reduction order is fixed per backend."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return _impl.matmul(a, b)


def softmax_rows(m) -> np.ndarray:
    """Row-wise softmax, max-shifted for stability; each row sums to 1."""
    return _impl.softmax_rows(_as_matrix(m, "m"))


def layer_norm(m, gain, bias) -> np.ndarray:
    """Per-row standardization (variance epsilon 1e-5) followed by an affine map."""
    m = _as_matrix(m, "m")
    gain = _as_vector(gain, m.shape[1], "gain")
    bias = _as_vector(bias, m.shape[1], "bias")
    return _impl.layer_norm(m, gain, bias)


def l2_normalize_rows(m) -> np.ndarray:
    """Scale each row to unit Euclidean norm; zero rows stay zero."""
    return _impl.l2_normalize_rows(_as_matrix(m, "m"))
