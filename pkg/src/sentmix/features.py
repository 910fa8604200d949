"""Latent feature batches shared across the three input modalities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

MODALITIES = ("text", "video", "audio")

# Keys used in the dataset file format.
SHORT_KEYS = {"text": "t", "video": "v", "audio": "a"}
LONG_KEYS = {v: k for k, v in SHORT_KEYS.items()}


@dataclass(frozen=True)
class ModalityBatch:
    """One modality's latent features for a batch: rows are samples."""

    modality: str
    features: np.ndarray

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}, expected one of {MODALITIES}")
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise ValueError(f"features must be 2-d (batch x dim), got shape {feats.shape}")
        if not np.isfinite(feats).all():
            raise ValueError(f"{self.modality} features contain non-finite entries")
        object.__setattr__(self, "features", feats)

    @property
    def batch_size(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


def tri_batch(text, video, audio) -> dict[str, ModalityBatch]:
    """Wrap three feature matrices into the canonical modality mapping."""
    return {
        "text": ModalityBatch("text", text),
        "video": ModalityBatch("video", video),
        "audio": ModalityBatch("audio", audio),
    }


def shared_batch_size(batches: Mapping[str, ModalityBatch]) -> int:
    """Validate that all three modalities are present with one batch size."""
    missing = [m for m in MODALITIES if m not in batches]
    if missing:
        raise ValueError(f"missing modalities: {missing}")
    sizes = {m: batches[m].batch_size for m in MODALITIES}
    if len(set(sizes.values())) != 1:
        raise ValueError(f"modalities disagree on batch size: {sizes}")
    return sizes["text"]
