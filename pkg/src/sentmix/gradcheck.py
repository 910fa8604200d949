"""Finite-difference gradient oracle and parameter-vector packing helpers.

This repository uses analytic gradients exclusively; the central-difference
estimate here exists to validate them, never to train with.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np


def finite_diff_grad(f: Callable[[np.ndarray], float], point, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient estimate of a scalar function.

    g_i = (f(p + step * e_i) - f(p - step * e_i)) / (2 * step)
    """
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    p = np.asarray(point, dtype=np.float64).copy()
    grad = np.zeros_like(p)
    for i in range(p.size):
        orig = p[i]
        p[i] = orig + step
        hi = f(p)
        p[i] = orig - step
        lo = f(p)
        p[i] = orig
        grad[i] = (hi - lo) / (2.0 * step)
    return grad


def pack_tree(tree: Mapping[str, np.ndarray]) -> tuple[np.ndarray, list[tuple[str, tuple, int]]]:
    """Flatten a named array tree into one vector plus its layout spec."""
    spec = [(name, tree[name].shape, tree[name].size) for name in tree]
    vec = np.concatenate([tree[name].ravel() for name in tree]) if spec else np.zeros(0)
    return vec, spec


def assign_tree(tree: Mapping[str, np.ndarray], vector: np.ndarray, spec) -> None:
    """Write a flat vector back into the tree's live arrays."""
    offset = 0
    for name, shape, size in spec:
        tree[name][...] = vector[offset : offset + size].reshape(shape)
        offset += size
    if offset != vector.size:
        raise ValueError(f"vector length {vector.size} does not match spec total {offset}")


def tree_grads_to_vector(grads: Mapping[str, np.ndarray], spec) -> np.ndarray:
    """Flatten a gradient tree in the same order as a packed spec."""
    return np.concatenate([np.asarray(grads[name]).ravel() for name, _, _ in spec])
