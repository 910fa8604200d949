"""Similarity-gated pair selection for mixing.

Samples are compared by cosine similarity of their L2-normalized latent
features, averaged over the three modalities. Only pairs whose averaged
similarity exceeds a threshold are eligible for mixing, which keeps samples
with opposing sentiment from being blended into semantically confusing
mixtures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import kernels
from .features import MODALITIES, ModalityBatch, shared_batch_size
from .rng import RngState

DEFAULT_THRESHOLD = 0.2


@dataclass(frozen=True)
class SimilarityReport:
    """Averaged cross-modal cosine similarity for one batch.

    ``matrix`` is symmetric with unit diagonal (for nonzero feature rows);
    ``mean_offdiag`` is the scalar mean over all i != j entries, kept as a
    batch-level diagnostic; ``threshold`` is the eligibility cutoff applied
    entrywise during selection.
    """

    matrix: np.ndarray
    mean_offdiag: float
    threshold: float

    @property
    def batch_size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class PairSelection:
    """Index pairs chosen for mixing; rows are (i, j) with i != j."""

    pairs: np.ndarray

    def __post_init__(self):
        pairs = np.ascontiguousarray(self.pairs, dtype=np.int64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError(f"pairs must have shape (count, 2), got {pairs.shape}")
        if pairs.shape[0] and (pairs[:, 0] == pairs[:, 1]).any():
            raise ValueError("self-pairs (i == j) are not allowed")
        object.__setattr__(self, "pairs", pairs)

    @property
    def count(self) -> int:
        return self.pairs.shape[0]

    @property
    def is_empty(self) -> bool:
        return self.pairs.shape[0] == 0


def empty_selection() -> PairSelection:
    return PairSelection(np.empty((0, 2), dtype=np.int64))


def similarity_matrix(
    batches: Mapping[str, ModalityBatch], threshold: float = DEFAULT_THRESHOLD
) -> SimilarityReport:
    """Average the per-modality cosine similarity matrices over modalities.

    Each modality's features are L2-row-normalized first, so entry (i, j)
    is the mean cosine similarity of samples i and j across text, video,
    and audio.
    """
    b = shared_batch_size(batches)
    if b < 2:
        raise ValueError(f"similarity needs a batch of at least 2 samples, got {b}")
    s = np.zeros((b, b))
    for m in MODALITIES:
        zn = kernels.l2_normalize_rows(batches[m].features)
        s += kernels.matmul(zn, zn.T)
    s /= float(len(MODALITIES))
    off = ~np.eye(b, dtype=bool)
    return SimilarityReport(matrix=s, mean_offdiag=float(s[off].mean()), threshold=float(threshold))


def eligible_pairs(report: SimilarityReport) -> np.ndarray:
    """All (i, j), i < j in lexicographic order with similarity above threshold."""
    s = report.matrix
    iu, ju = np.triu_indices(report.batch_size, k=1)
    keep = s[iu, ju] > report.threshold
    return np.stack([iu[keep], ju[keep]], axis=1).astype(np.int64)


def select_pairs(report: SimilarityReport, target: int, rng: RngState) -> PairSelection:
    """Uniformly sample ``target`` eligible pairs.

    Sampling is without replacement while the eligible set is large enough
    and with replacement once it is smaller than ``target``. An empty
    eligible set yields an empty selection, which signals "skip augmentation
    for this batch" rather than an error.
    """
    if target < 1:
        raise ValueError(f"target must be >= 1, got {target}")
    candidates = eligible_pairs(report)
    n = candidates.shape[0]
    if n == 0:
        return empty_selection()
    if n >= target:
        order = np.arange(n)
        for k in range(target):
            j = k + rng.randint_below(n - k)
            order[k], order[j] = order[j], order[k]
        chosen = candidates[order[:target]]
    else:
        idx = np.array([rng.randint_below(n) for _ in range(target)], dtype=np.int64)
        chosen = candidates[idx]
    return PairSelection(chosen)
