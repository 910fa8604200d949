"""Synthetic multimodal sentiment data, the dataset file format, and occlusion.

Each sample is a continuous sentiment label in [-3, 3] plus one raw feature
vector per modality: the label times a fixed unit direction, corrupted by
Gaussian noise. That gives the latent space an emotion-aligned structure, so
similarity-gated selection and intensity prediction have real signal to work
with at desk scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .features import LONG_KEYS, MODALITIES, SHORT_KEYS
from .rng import RngState

SPLITS = ("train", "val", "test")

DEFAULT_RAW_DIM = 512
DEFAULT_NOISE_SIGMA = 0.1
LABEL_RANGE = 3.0

# Child-stream tags for generation.
_TAG_LABELS = 101
_TAG_DIRECTION = 110  # + modality index
_TAG_NOISE = 120  # + modality index
_TAG_OCCLUDE = 130  # + modality index


class DatasetFormatError(ValueError):
    """Raised when a dataset file is malformed; names the offending field."""

    def __init__(self, fieldname: str, message: str):
        super().__init__(f"dataset field {fieldname!r}: {message}")
        self.fieldname = fieldname


@dataclass(frozen=True)
class SynthConfig:
    n: int
    raw_dims: dict[str, int] = field(default_factory=lambda: {m: DEFAULT_RAW_DIM for m in MODALITIES})
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    seed: int = 0
    directions: dict[str, np.ndarray] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.noise_sigma < 0.0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.directions is not None:
            normalized = {}
            for m in MODALITIES:
                d = np.asarray(self.directions[m], dtype=np.float64)
                norm = float(np.sqrt((d * d).sum()))
                if norm == 0.0:
                    raise ValueError(f"{m} signal direction must be nonzero")
                normalized[m] = d / norm
            object.__setattr__(self, "directions", normalized)


@dataclass(frozen=True)
class Dataset:
    labels: np.ndarray  # (n,) in [-3, 3]
    features: dict[str, np.ndarray]  # modality -> (n, raw_dim)
    split: str = "train"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        labels = np.ascontiguousarray(self.labels, dtype=np.float64)
        object.__setattr__(self, "labels", labels)
        feats = {}
        for m in MODALITIES:
            if m not in self.features:
                raise ValueError(f"missing modality {m!r}")
            x = np.ascontiguousarray(self.features[m], dtype=np.float64)
            if x.ndim != 2 or x.shape[0] != labels.shape[0]:
                raise ValueError(
                    f"{m} features must be ({labels.shape[0]}, dim), got shape {x.shape}"
                )
            feats[m] = x
        object.__setattr__(self, "features", feats)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def raw_dims(self) -> dict[str, int]:
        return {m: self.features[m].shape[1] for m in MODALITIES}


def generate(config: SynthConfig) -> Dataset:
    """Draw labels uniform in [-3, 3] and noisy rank-one features per modality."""
    root = RngState(config.seed)
    labels = root.child(_TAG_LABELS).uniforms(config.n) * (2.0 * LABEL_RANGE) - LABEL_RANGE
    features = {}
    for k, m in enumerate(MODALITIES):
        dim = config.raw_dims[m]
        if config.directions is not None:
            direction = config.directions[m]
            if direction.shape[0] != dim:
                raise ValueError(f"{m} direction length {direction.shape[0]} != raw dim {dim}")
        else:
            raw = root.child(_TAG_DIRECTION + k).normals(dim)
            direction = raw / np.sqrt((raw * raw).sum())
        noise = root.child(_TAG_NOISE + k).normals(config.n * dim).reshape(config.n, dim)
        features[m] = labels[:, None] * direction[None, :] + config.noise_sigma * noise
    meta = {"seed": config.seed, "sigma": config.noise_sigma}
    return Dataset(labels=labels, features=features, split="train", meta=meta)


def occlude(dataset: Dataset, ratio: float, rng: RngState, mode: str = "entries") -> Dataset:
    """Randomly zero raw inputs; labels and shapes are untouched.

    ``entries`` zeros each feature entry independently with probability
    ``ratio``; ``modalities`` zeros a sample's whole modality row instead.
    """
    if not 0.0 <= ratio <= 0.4:
        raise ValueError(f"occlusion ratio must lie in [0, 0.4], got {ratio}")
    if mode not in ("entries", "modalities"):
        raise ValueError(f"occlusion mode must be 'entries' or 'modalities', got {mode!r}")
    if ratio == 0.0:
        return dataset
    features = {}
    for k, m in enumerate(MODALITIES):
        x = dataset.features[m]
        child = rng.child(_TAG_OCCLUDE + k)
        if mode == "entries":
            mask = child.uniforms(x.size).reshape(x.shape) >= ratio
            features[m] = x * mask
        else:
            keep = child.uniforms(x.shape[0]) >= ratio
            features[m] = x * keep[:, None]
    meta = dict(dataset.meta)
    meta["occlusion"] = {"ratio": ratio, "mode": mode}
    return Dataset(labels=dataset.labels, features=features, split=dataset.split, meta=meta)


def save(dataset: Dataset, path) -> None:
    """One JSON document; float64 values survive a round trip exactly."""
    doc = {
        "n": dataset.n,
        "labels": [float(x) for x in dataset.labels],
        "modalities": {
            SHORT_KEYS[m]: [[float(v) for v in row] for row in dataset.features[m]]
            for m in MODALITIES
        },
        "meta": dict(dataset.meta),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, allow_nan=False)


def load(path) -> Dataset:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError("<document>", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DatasetFormatError("<document>", "top level must be an object")
    for key in ("n", "labels", "modalities"):
        if key not in doc:
            raise DatasetFormatError(key, "missing")
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise DatasetFormatError("n", f"must be a positive integer, got {n!r}")
    labels = np.asarray(doc["labels"], dtype=np.float64)
    if labels.ndim != 1 or labels.shape[0] != n:
        raise DatasetFormatError("labels", f"expected {n} values, got shape {labels.shape}")
    modalities = doc["modalities"]
    if not isinstance(modalities, dict):
        raise DatasetFormatError("modalities", "must be an object")
    features = {}
    for short, m in LONG_KEYS.items():
        if short not in modalities:
            raise DatasetFormatError(f"modalities.{short}", f"missing modality {short!r}")
        try:
            x = np.asarray(modalities[short], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise DatasetFormatError(f"modalities.{short}", f"not numeric: {exc}") from exc
        if x.ndim != 2 or x.shape[0] != n:
            raise DatasetFormatError(
                f"modalities.{short}", f"expected {n} rows of features, got shape {x.shape}"
            )
        features[m] = x
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise DatasetFormatError("meta", "must be an object")
    split = meta.get("split", "train")
    return Dataset(labels=labels, features=features, split=split, meta=meta)


def split_dataset(dataset: Dataset, rng: RngState) -> dict[str, Dataset]:
    """Seeded-shuffle 70/15/15 split into train/val/test datasets."""
    n = dataset.n
    order = rng.permutation(n)
    n_train = int(0.70 * n)
    n_val = int(0.15 * n)
    bounds = {
        "train": order[:n_train],
        "val": order[n_train : n_train + n_val],
        "test": order[n_train + n_val :],
    }
    out = {}
    for split, idx in bounds.items():
        out[split] = Dataset(
            labels=dataset.labels[idx],
            features={m: dataset.features[m][idx] for m in MODALITIES},
            split=split,
            meta=dict(dataset.meta),
        )
    return out


def dataset_fingerprint(dataset: Dataset) -> str:
    """Short stable hash of the data content, for controlled-comparison records."""
    import hashlib

    h = hashlib.sha256()
    h.update(dataset.labels.tobytes())
    for m in MODALITIES:
        h.update(dataset.features[m].tobytes())
    return h.hexdigest()[:16]
