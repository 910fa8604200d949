"""Adaptive feature/label interpolation driven by intensity weights.

Each selected pair gets one base ratio drawn from Beta(alpha, alpha), shared
by all three modalities. The modality-specific ratio averages that base draw
with the pair's relative intensity weight, and the label ratio is the mean of
the three modality ratios. A plain shared-ratio path (random pairing, one
ratio for everything) is kept as the comparison baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .features import MODALITIES, ModalityBatch, shared_batch_size
from .intensity import DEGENERATE_RANGE, IntensityOutput
from .rng import RngState, sample_beta
from .selection import PairSelection, empty_selection


@dataclass(frozen=True)
class MixPlan:
    """Everything needed to materialize mixed samples for one batch."""

    pairs: np.ndarray  # (count, 2) int64
    lambda_base: np.ndarray  # (count,) base Beta draws, one per pair
    lam: dict[str, np.ndarray]  # modality -> (count,) mixing ratios
    lam_label: np.ndarray  # (count,) label ratios, mean over modalities

    @property
    def count(self) -> int:
        return self.pairs.shape[0]

    @property
    def is_empty(self) -> bool:
        return self.pairs.shape[0] == 0


@dataclass(frozen=True)
class MixedBatch:
    """Interpolated latent features and labels produced from a plan."""

    features: dict[str, np.ndarray]  # modality -> (count, dim)
    labels: np.ndarray  # (count,)


def pair_ratio(weight_i: float, weight_j: float, lambda_base: float) -> float:
    """Mixing ratio for one pair: average of the weight share and the base draw.

    The share term w_i / (w_i + w_j) defaults to 0.5 when both weights vanish,
    so degenerate batches fall back to plain base mixing. The result lies in
    [0, 1] whenever lambda_base does.
    """
    if weight_i < 0.0 or weight_j < 0.0:
        raise ValueError(f"weights must be non-negative, got ({weight_i}, {weight_j})")
    if not 0.0 <= lambda_base <= 1.0:
        raise ValueError(f"lambda_base must lie in [0, 1], got {lambda_base}")
    total = weight_i + weight_j
    share = 0.5 if total < DEGENERATE_RANGE else weight_i / total
    return 0.5 * (share + lambda_base)


class RatioCache(NamedTuple):
    pairs: np.ndarray
    w_i: np.ndarray
    w_j: np.ndarray
    totals: np.ndarray
    live: np.ndarray  # False where the degenerate 0.5 fallback fired
    batch_size: int


def ratios_forward(
    weights: np.ndarray, pairs: np.ndarray, lambda_base: np.ndarray
) -> tuple[np.ndarray, RatioCache]:
    """Vectorized pair ratios over a weight vector; returns (ratios, cache)."""
    w_i = weights[pairs[:, 0]]
    w_j = weights[pairs[:, 1]]
    totals = w_i + w_j
    live = totals >= DEGENERATE_RANGE
    share = np.where(live, w_i / np.where(live, totals, 1.0), 0.5)
    return 0.5 * (share + lambda_base), RatioCache(
        pairs, w_i, w_j, totals, live, weights.shape[0]
    )


def ratios_backward(cache: RatioCache, d_ratios: np.ndarray) -> np.ndarray:
    """Gradient of the ratios with respect to the full weight vector."""
    d_share = 0.5 * np.where(cache.live, d_ratios, 0.0)
    sq = np.where(cache.live, cache.totals, 1.0) ** 2
    d_wi = d_share * cache.w_j / sq
    d_wj = -d_share * cache.w_i / sq
    d_weights = np.zeros(cache.batch_size)
    np.add.at(d_weights, cache.pairs[:, 0], d_wi)
    np.add.at(d_weights, cache.pairs[:, 1], d_wj)
    return d_weights


def _empty_plan() -> MixPlan:
    zero = np.zeros(0)
    return MixPlan(
        pairs=np.empty((0, 2), dtype=np.int64),
        lambda_base=zero,
        lam={m: zero.copy() for m in MODALITIES},
        lam_label=zero.copy(),
    )


def build_mix_plan(
    selection: PairSelection,
    outputs: Mapping[str, IntensityOutput],
    rng: RngState,
    alpha: float,
) -> MixPlan:
    """Ratios for every selected pair from the three modalities' weights.

    One Beta(alpha, alpha) base draw per pair is shared by all modalities of
    that pair; the label ratio is the arithmetic mean of the three modality
    ratios. An empty selection produces an empty plan.
    """
    if selection.is_empty:
        return _empty_plan()
    pairs = selection.pairs
    base = np.array([sample_beta(rng, alpha) for _ in range(pairs.shape[0])])
    lam = {}
    for m in MODALITIES:
        lam[m], _ = ratios_forward(outputs[m].weights, pairs, base)
    lam_label = sum(lam[m] for m in MODALITIES) / float(len(MODALITIES))
    return MixPlan(pairs=pairs, lambda_base=base, lam=lam, lam_label=lam_label)


def build_shared_plan(selection: PairSelection, rng: RngState, alpha: float) -> MixPlan:
    """Plan where every modality and the label reuse the base draw unchanged."""
    if selection.is_empty:
        return _empty_plan()
    pairs = selection.pairs
    base = np.array([sample_beta(rng, alpha) for _ in range(pairs.shape[0])])
    return MixPlan(
        pairs=pairs,
        lambda_base=base,
        lam={m: base.copy() for m in MODALITIES},
        lam_label=base.copy(),
    )


def mix_features(plan: MixPlan, batches: Mapping[str, ModalityBatch]) -> dict[str, np.ndarray]:
    """Convex combinations z_mixed = lam * z_i + (1 - lam) * z_j per modality."""
    b = shared_batch_size(batches)
    if plan.count and int(plan.pairs.max()) >= b:
        raise IndexError(f"pair index {int(plan.pairs.max())} out of range for batch size {b}")
    mixed = {}
    for m in MODALITIES:
        z = batches[m].features
        lam = plan.lam[m][:, None]
        mixed[m] = lam * z[plan.pairs[:, 0]] + (1.0 - lam) * z[plan.pairs[:, 1]]
    return mixed


def mix_labels(plan: MixPlan, labels: np.ndarray) -> np.ndarray:
    """Label interpolation with the per-pair label ratio."""
    labels = np.asarray(labels, dtype=np.float64)
    if plan.count and int(plan.pairs.max()) >= labels.shape[0]:
        raise IndexError(
            f"pair index {int(plan.pairs.max())} out of range for {labels.shape[0]} labels"
        )
    return plan.lam_label * labels[plan.pairs[:, 0]] + (1.0 - plan.lam_label) * labels[
        plan.pairs[:, 1]
    ]


def mix_batch(
    plan: MixPlan, batches: Mapping[str, ModalityBatch], labels: np.ndarray
) -> MixedBatch:
    return MixedBatch(features=mix_features(plan, batches), labels=mix_labels(plan, labels))


def random_pairs(batch_size: int, count: int, rng: RngState) -> PairSelection:
    """Random in-batch pairing: sample k is paired with a uniform partner != k."""
    if batch_size < 2:
        raise ValueError(f"random pairing needs a batch of at least 2, got {batch_size}")
    pairs = np.empty((count, 2), dtype=np.int64)
    for k in range(count):
        i = k % batch_size
        j = (i + 1 + rng.randint_below(batch_size - 1)) % batch_size
        pairs[k] = (i, j)
    return PairSelection(pairs)


def vanilla_latent_mix(
    batches: Mapping[str, ModalityBatch],
    labels: np.ndarray,
    rng: RngState,
    alpha: float,
) -> tuple[MixPlan, MixedBatch]:
    """Baseline latent mixing: random pairs, one shared ratio per pair."""
    b = shared_batch_size(batches)
    selection = random_pairs(b, b, rng)
    plan = build_shared_plan(selection, rng, alpha)
    return plan, mix_batch(plan, batches, labels)
