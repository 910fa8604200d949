"""Adaptive-moment optimizer over a named tree of parameter arrays."""

from __future__ import annotations

import numpy as np


class Adam:
    """Updates parameter arrays in place; the tree maps names to live arrays."""

    def __init__(
        self,
        tree: dict[str, np.ndarray],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.tree = tree
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {k: np.zeros_like(v) for k, v in tree.items()}
        self._v = {k: np.zeros_like(v) for k, v in tree.items()}

    def step(self, grads: dict[str, np.ndarray]):
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, param in self.tree.items():
            g = grads[name]
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            param -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
