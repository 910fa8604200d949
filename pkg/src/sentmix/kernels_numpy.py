"""Pure-numpy implementations of the dense kernels.

Inputs are validated and coerced by :mod:`sentmix.kernels`; these functions
assume C-contiguous float64 arrays of consistent shapes.
"""

import numpy as np

LAYER_NORM_EPS = 1e-5


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b


def softmax_rows(m: np.ndarray) -> np.ndarray:
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def layer_norm(m: np.ndarray, gain: np.ndarray, bias: np.ndarray) -> np.ndarray:
    mean = m.mean(axis=1, keepdims=True)
    var = m.var(axis=1, keepdims=True)
    return (m - mean) / np.sqrt(var + LAYER_NORM_EPS) * gain + bias


def l2_normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.sqrt((m * m).sum(axis=1, keepdims=True))
    # Zero rows pass through unchanged instead of dividing by zero.
    return m / np.where(norms > 0.0, norms, 1.0)
