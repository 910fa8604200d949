"""Minimal multimodal regression network hosting the augmentation pipeline.

Architecture: one affine + tanh encoder per modality producing the latent
features the augmentation operates on, concatenation fusion through a single
affine + tanh hidden layer, and an affine scalar head. Gradients are analytic
and validated against central finite differences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .features import MODALITIES, ModalityBatch
from .rng import RngState

DEFAULT_LATENT_DIM = 32
DEFAULT_HIDDEN_DIM = 32

CHECKPOINT_FORMAT = "sentmix-checkpoint-v1"


@dataclass
class BackboneParams:
    enc_w: dict[str, np.ndarray]  # modality -> (raw_dim, latent_dim)
    enc_b: dict[str, np.ndarray]  # modality -> (latent_dim,)
    fus_w: np.ndarray  # (sum latent dims, hidden)
    fus_b: np.ndarray  # (hidden,)
    head_w: np.ndarray  # (hidden,)
    head_b: np.ndarray  # (1,)

    @property
    def latent_dims(self) -> dict[str, int]:
        return {m: self.enc_w[m].shape[1] for m in MODALITIES}

    @property
    def raw_dims(self) -> dict[str, int]:
        return {m: self.enc_w[m].shape[0] for m in MODALITIES}

    def tree(self, prefix: str = "backbone") -> dict[str, np.ndarray]:
        """Named live views of every parameter array."""
        out: dict[str, np.ndarray] = {}
        for m in MODALITIES:
            out[f"{prefix}.enc_w.{m}"] = self.enc_w[m]
            out[f"{prefix}.enc_b.{m}"] = self.enc_b[m]
        out[f"{prefix}.fus_w"] = self.fus_w
        out[f"{prefix}.fus_b"] = self.fus_b
        out[f"{prefix}.head_w"] = self.head_w
        out[f"{prefix}.head_b"] = self.head_b
        return out

    @staticmethod
    def zeros_like(p: "BackboneParams") -> "BackboneParams":
        return BackboneParams(
            enc_w={m: np.zeros_like(p.enc_w[m]) for m in MODALITIES},
            enc_b={m: np.zeros_like(p.enc_b[m]) for m in MODALITIES},
            fus_w=np.zeros_like(p.fus_w),
            fus_b=np.zeros_like(p.fus_b),
            head_w=np.zeros_like(p.head_w),
            head_b=np.zeros_like(p.head_b),
        )


def init_backbone(
    raw_dims: Mapping[str, int],
    latent_dim: int = DEFAULT_LATENT_DIM,
    hidden_dim: int = DEFAULT_HIDDEN_DIM,
    rng: RngState | None = None,
) -> BackboneParams:
    """Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; zero biases."""
    rng = rng if rng is not None else RngState(0)

    def draw(fan_in: int, *shape):
        bound = 1.0 / math.sqrt(fan_in)
        size = int(np.prod(shape))
        return (rng.uniforms(size) * 2.0 - 1.0).reshape(shape) * bound

    enc_w = {}
    enc_b = {}
    for m in MODALITIES:
        enc_w[m] = draw(raw_dims[m], raw_dims[m], latent_dim)
        enc_b[m] = np.zeros(latent_dim)
    fused_in = latent_dim * len(MODALITIES)
    return BackboneParams(
        enc_w=enc_w,
        enc_b=enc_b,
        fus_w=draw(fused_in, fused_in, hidden_dim),
        fus_b=np.zeros(hidden_dim),
        head_w=draw(hidden_dim, hidden_dim),
        head_b=np.zeros(1),
    )


class EncodeCache(NamedTuple):
    raw: dict[str, np.ndarray]
    latent: dict[str, np.ndarray]


def encode_forward(
    params: BackboneParams, raw: Mapping[str, np.ndarray]
) -> tuple[dict[str, np.ndarray], EncodeCache]:
    latent = {}
    raw64 = {}
    for m in MODALITIES:
        x = np.ascontiguousarray(raw[m], dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != params.enc_w[m].shape[0]:
            raise ValueError(
                f"{m} raw features must be (batch, {params.enc_w[m].shape[0]}), got {x.shape}"
            )
        raw64[m] = x
        latent[m] = np.tanh(x @ params.enc_w[m] + params.enc_b[m])
    return latent, EncodeCache(raw=raw64, latent=latent)


def encode(params: BackboneParams, raw: Mapping[str, np.ndarray]) -> dict[str, ModalityBatch]:
    """Per-modality latent features consumed by selection and mixing."""
    latent, _ = encode_forward(params, raw)
    return {m: ModalityBatch(m, latent[m]) for m in MODALITIES}


def encode_backward(
    params: BackboneParams, cache: EncodeCache, d_latent: Mapping[str, np.ndarray]
) -> BackboneParams:
    """Gradients of the encoder weights; input gradients are not needed."""
    grads = BackboneParams.zeros_like(params)
    for m in MODALITIES:
        d_pre = d_latent[m] * (1.0 - cache.latent[m] ** 2)
        grads.enc_w[m][:] = cache.raw[m].T @ d_pre
        grads.enc_b[m][:] = d_pre.sum(axis=0)
    return grads


class FuseCache(NamedTuple):
    fused: np.ndarray  # (B, sum latent dims) concatenated input
    hidden: np.ndarray  # (B, hidden) post-tanh
    splits: list[int]


def fuse_forward(
    params: BackboneParams, latent: Mapping[str, np.ndarray]
) -> tuple[np.ndarray, FuseCache]:
    mats = [np.asarray(latent[m], dtype=np.float64) for m in MODALITIES]
    fused = np.concatenate(mats, axis=1)
    if fused.shape[1] != params.fus_w.shape[0]:
        raise ValueError(
            f"fused width {fused.shape[1]} does not match fusion weight {params.fus_w.shape}"
        )
    hidden = np.tanh(fused @ params.fus_w + params.fus_b)
    preds = hidden @ params.head_w + params.head_b[0]
    return preds, FuseCache(fused=fused, hidden=hidden, splits=[m.shape[1] for m in mats])


def fuse_predict(params: BackboneParams, batches: Mapping[str, ModalityBatch]) -> np.ndarray:
    """Scalar sentiment prediction per sample from the three latent batches."""
    preds, _ = fuse_forward(params, {m: batches[m].features for m in MODALITIES})
    return preds


def fuse_backward(
    params: BackboneParams, cache: FuseCache, d_preds: np.ndarray
) -> tuple[BackboneParams, dict[str, np.ndarray]]:
    """Gradients of fusion/head parameters plus gradients w.r.t. each latent input."""
    grads = BackboneParams.zeros_like(params)
    d_preds = np.asarray(d_preds, dtype=np.float64)
    grads.head_w[:] = cache.hidden.T @ d_preds
    grads.head_b[0] = d_preds.sum()
    d_hidden = d_preds[:, None] * params.head_w[None, :]
    d_pre = d_hidden * (1.0 - cache.hidden**2)
    grads.fus_w[:] = cache.fused.T @ d_pre
    grads.fus_b[:] = d_pre.sum(axis=0)
    d_fused = d_pre @ params.fus_w.T
    d_latent = {}
    offset = 0
    for m, width in zip(MODALITIES, cache.splits):
        d_latent[m] = d_fused[:, offset : offset + width]
        offset += width
    return grads, d_latent


def _array_to_json(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(x) for x in a.ravel()]}


def _array_from_json(obj: dict, name: str) -> np.ndarray:
    try:
        shape = tuple(obj["shape"])
        data = obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"checkpoint field {name!r} is malformed: {exc}") from exc
    arr = np.asarray(data, dtype=np.float64)
    if arr.size != int(np.prod(shape)):
        raise ValueError(f"checkpoint field {name!r}: {arr.size} values for shape {shape}")
    return np.ascontiguousarray(arr.reshape(shape))


def save_checkpoint(path, backbone: BackboneParams, predictors: Mapping | None, config: dict):
    """Write all parameters as one JSON document (shape header + flat arrays)."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "config": config,
        "backbone": {name: _array_to_json(a) for name, a in backbone.tree("backbone").items()},
        "predictors": {},
    }
    if predictors:
        for m in MODALITIES:
            doc["predictors"][m] = {
                name: _array_to_json(a) for name, a in predictors[m].tree(m).items()
            }
    with open(path, "w") as fh:
        json.dump(doc, fh, allow_nan=False)


def load_checkpoint(path):
    """Read a checkpoint; returns (backbone, predictors or None, config dict)."""
    from .intensity import IntensityPredictorParams

    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unrecognized checkpoint format: {doc.get('format')!r}")
    bb_raw = doc["backbone"]
    backbone = BackboneParams(
        enc_w={m: _array_from_json(bb_raw[f"backbone.enc_w.{m}"], f"enc_w.{m}") for m in MODALITIES},
        enc_b={m: _array_from_json(bb_raw[f"backbone.enc_b.{m}"], f"enc_b.{m}") for m in MODALITIES},
        fus_w=_array_from_json(bb_raw["backbone.fus_w"], "fus_w"),
        fus_b=_array_from_json(bb_raw["backbone.fus_b"], "fus_b"),
        head_w=_array_from_json(bb_raw["backbone.head_w"], "head_w"),
        head_b=_array_from_json(bb_raw["backbone.head_b"], "head_b"),
    )
    predictors = None
    if doc.get("predictors"):
        predictors = {}
        for m in MODALITIES:
            p = doc["predictors"][m]
            predictors[m] = IntensityPredictorParams(
                w_q=_array_from_json(p[f"{m}.w_q"], f"{m}.w_q"),
                w_k=_array_from_json(p[f"{m}.w_k"], f"{m}.w_k"),
                w_v=_array_from_json(p[f"{m}.w_v"], f"{m}.w_v"),
                w_o=_array_from_json(p[f"{m}.w_o"], f"{m}.w_o"),
                ln_gain=_array_from_json(p[f"{m}.ln_gain"], f"{m}.ln_gain"),
                ln_bias=_array_from_json(p[f"{m}.ln_bias"], f"{m}.ln_bias"),
            )
    return backbone, predictors, doc.get("config", {})
