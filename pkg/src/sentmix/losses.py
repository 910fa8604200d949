"""Task, mixed-sample, and distribution-alignment losses plus the joint total."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .features import MODALITIES

# Floor applied before logs. Softmax output never reaches 0 in float64; this
# guards distributions loaded from files.
PROB_FLOOR = 1e-300

DEFAULT_MIX_WEIGHT = 0.7
DEFAULT_SAL_WEIGHT = 0.5
DEFAULT_SAL_SCALE = 1000.0


@dataclass(frozen=True)
class LossWeights:
    """Weights of the joint objective: total = task + mix_weight * mix + sal_weight * sal."""

    mix_weight: float = DEFAULT_MIX_WEIGHT
    sal_weight: float = DEFAULT_SAL_WEIGHT
    sal_scale: float = DEFAULT_SAL_SCALE

    def __post_init__(self):
        if self.mix_weight < 0.0 or self.sal_weight < 0.0:
            raise ValueError("loss weights must be non-negative")
        if self.sal_scale <= 0.0:
            raise ValueError("sal_scale must be positive")


@dataclass(frozen=True)
class LossBreakdown:
    task: float
    mix_mse: float
    sal: float
    total: float


def _pair_vectors(a, b, name_a: str, name_b: str) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"{name_a} {a.shape} and {name_b} {b.shape} must be equal-length vectors")
    return a, b


def task_mse(predictions, labels) -> float:
    """Mean squared error over the original samples."""
    p, y = _pair_vectors(predictions, labels, "predictions", "labels")
    if p.size < 1:
        raise ValueError("task_mse needs at least one sample")
    return float(np.mean((p - y) ** 2))


def mix_mse(pred_on_mixed, labels_i, labels_j, lam_label) -> float:
    """Mixed-sample loss: each mixed prediction scored against both source labels.

    The network is evaluated once per mixed sample; the two squared errors are
    weighted by the label ratio and its complement.
    """
    p, yi = _pair_vectors(pred_on_mixed, labels_i, "pred_on_mixed", "labels_i")
    _, yj = _pair_vectors(pred_on_mixed, labels_j, "pred_on_mixed", "labels_j")
    _, lam = _pair_vectors(pred_on_mixed, lam_label, "pred_on_mixed", "lam_label")
    if p.size < 1:
        raise ValueError("mix_mse needs at least one pair")
    if (lam < 0.0).any() or (lam > 1.0).any():
        raise ValueError("label ratios must lie in [0, 1]")
    return float(np.mean(lam * (p - yi) ** 2 + (1.0 - lam) * (p - yj) ** 2))


def batch_softmax(values) -> np.ndarray:
    """Exp-normalize a vector over the batch dimension, max-shifted for stability."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"batch_softmax needs a non-empty vector, got shape {v.shape}")
    e = np.exp(v - v.max())
    return e / e.sum()


def kl_divergence(p_label, p_modal) -> float:
    """Batch-averaged KL divergence (1/B) * sum_i p_i (log p_i - log q_i).

    The extra 1/B factor is part of the alignment-loss definition used here;
    the scale factor applied downstream compensates for it.
    """
    p, q = _pair_vectors(p_label, p_modal, "p_label", "p_modal")
    p = np.maximum(p, PROB_FLOOR)
    q = np.maximum(q, PROB_FLOOR)
    return float(np.sum(p * (np.log(p) - np.log(q))) / p.size)


def sal_loss(intensities: Mapping[str, np.ndarray], labels, scale: float = DEFAULT_SAL_SCALE) -> float:
    """Alignment loss: scaled KL between label and intensity batch distributions.

    Both the labels and each modality's intensities are pushed through a batch
    softmax; the per-modality divergences are summed and multiplied by scale.
    """
    y = np.asarray(labels, dtype=np.float64)
    p_label = batch_softmax(y)
    total = 0.0
    for m in MODALITIES:
        i_m = np.asarray(intensities[m], dtype=np.float64)
        if i_m.shape != y.shape:
            raise ValueError(f"{m} intensities shape {i_m.shape} != labels shape {y.shape}")
        total += kl_divergence(p_label, batch_softmax(i_m))
    return float(total * scale)


def total_loss(task: float, mix: float, sal: float, weights: LossWeights) -> LossBreakdown:
    """Combine the three components into the weighted joint objective."""
    for name, value in (("task", task), ("mix", mix), ("sal", sal)):
        if not np.isfinite(value):
            raise ValueError(f"{name} loss is not finite: {value}")
    return LossBreakdown(
        task=float(task),
        mix_mse=float(mix),
        sal=float(sal),
        total=float(task + weights.mix_weight * mix + weights.sal_weight * sal),
    )
