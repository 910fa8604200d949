"""Regression and bucketed-classification metrics for sentiment scores.

Continuous predictions are mapped onto discrete sentiment categories:
two-way by sign (negative vs. non-negative), five- and seven-way by rounding
to the nearest integer and clamping (round-half-to-even, numpy convention).
The ``w_`` variants drop neutral (zero-label) samples first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .losses import LossBreakdown


@dataclass
class MetricsReport:
    mae: float
    acc2: float
    w_acc2: float
    acc5: float
    acc7: float
    f1: float
    w_f1: float
    loss_trail: list[LossBreakdown] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mae": self.mae,
            "acc2": self.acc2,
            "w_acc2": self.w_acc2,
            "acc5": self.acc5,
            "acc7": self.acc7,
            "f1": self.f1,
            "w_f1": self.w_f1,
            "loss_trail": [
                {"task": l.task, "mix_mse": l.mix_mse, "sal": l.sal, "total": l.total}
                for l in self.loss_trail
            ],
        }


def _bucket(values: np.ndarray, bound: int) -> np.ndarray:
    return np.clip(np.round(values), -bound, bound)


def _binary_f1(pred_pos: np.ndarray, true_pos: np.ndarray) -> float:
    tp = float(np.sum(pred_pos & true_pos))
    fp = float(np.sum(pred_pos & ~true_pos))
    fn = float(np.sum(~pred_pos & true_pos))
    denom = 2.0 * tp + fp + fn
    if denom == 0.0:
        return 0.0
    return 2.0 * tp / denom


def compute_metrics(predictions, labels) -> MetricsReport:
    """All seven metrics for one evaluation split."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape or p.ndim != 1 or p.size == 0:
        raise ValueError(f"predictions {p.shape} and labels {y.shape} must be equal non-empty vectors")

    mae = float(np.mean(np.abs(p - y)))
    pred_pos = p >= 0.0
    true_pos = y >= 0.0
    acc2 = float(np.mean(pred_pos == true_pos))
    acc5 = float(np.mean(_bucket(p, 2) == _bucket(y, 2)))
    acc7 = float(np.mean(_bucket(p, 3) == _bucket(y, 3)))
    f1 = _binary_f1(pred_pos, true_pos)

    nonzero = y != 0.0
    if nonzero.any():
        pz, yz = pred_pos[nonzero], true_pos[nonzero]
        w_acc2 = float(np.mean(pz == yz))
        n_pos = float(yz.sum())
        n_neg = float((~yz).sum())
        # Support-weighted mean of the per-class F1 scores.
        w_f1 = (n_pos * _binary_f1(pz, yz) + n_neg * _binary_f1(~pz, ~yz)) / (n_pos + n_neg)
    else:
        w_acc2 = 0.0
        w_f1 = 0.0
    return MetricsReport(mae=mae, acc2=acc2, w_acc2=w_acc2, acc5=acc5, acc7=acc7, f1=f1, w_f1=float(w_f1))
