"""Per-modality emotional intensity prediction and min-max mixing weights.

The predictor is a single multi-head self-attention block attending across
the batch dimension (samples attend to samples), with a residual connection,
layer normalization, mean-pooling over the feature dimension, and a tanh
squashing the result into (-1, 1) — one scalar intensity per sample.

Intensities are turned into mixing weights by min-max normalization with an
absolute-value numerator. That formula can exceed 1 when intensities are
negative (the numerator uses |I| while the range uses signed min/max); the
raw values are kept as computed and clamped to [0, 1] only where weights
feed ratio construction, with clamp events logged.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .features import ModalityBatch
from .rng import RngState

logger = logging.getLogger(__name__)

MINMAX_EPSILON = 1e-8

# Below this intensity spread the min-max weights are considered degenerate
# and the quotient term of the pair ratio falls back to plain base mixing.
DEGENERATE_RANGE = 1e-12


@dataclass
class IntensityPredictorParams:
    """Weights of one modality's intensity predictor.

    ``w_q``/``w_k``/``w_v`` hold one (dim x key_dim) projection per head;
    ``w_o`` maps the concatenated heads back to the feature dimension.
    """

    w_q: np.ndarray  # (heads, dim, key_dim)
    w_k: np.ndarray  # (heads, dim, key_dim)
    w_v: np.ndarray  # (heads, dim, key_dim)
    w_o: np.ndarray  # (heads * key_dim, dim)
    ln_gain: np.ndarray  # (dim,)
    ln_bias: np.ndarray  # (dim,)

    @property
    def heads(self) -> int:
        return self.w_q.shape[0]

    @property
    def dim(self) -> int:
        return self.w_q.shape[1]

    @property
    def key_dim(self) -> int:
        return self.w_q.shape[2]

    def tree(self, prefix: str) -> dict[str, np.ndarray]:
        """Named live views of every parameter array."""
        return {
            f"{prefix}.w_q": self.w_q,
            f"{prefix}.w_k": self.w_k,
            f"{prefix}.w_v": self.w_v,
            f"{prefix}.w_o": self.w_o,
            f"{prefix}.ln_gain": self.ln_gain,
            f"{prefix}.ln_bias": self.ln_bias,
        }

    @staticmethod
    def zeros_like(p: "IntensityPredictorParams") -> "IntensityPredictorParams":
        return IntensityPredictorParams(
            w_q=np.zeros_like(p.w_q),
            w_k=np.zeros_like(p.w_k),
            w_v=np.zeros_like(p.w_v),
            w_o=np.zeros_like(p.w_o),
            ln_gain=np.zeros_like(p.ln_gain),
            ln_bias=np.zeros_like(p.ln_bias),
        )


# Init bound for the layer-norm affine. A uniform (all-equal) gain would make
# the mean-pool of each normalized row exactly zero, parking every intensity
# at tanh(0) on the min-max degenerate guard; a wide random gain instead gives
# the pooled statistic unit-order spread from the first step, which keeps the
# pair-ratio gradients (scaled by 1 / intensity range) well conditioned.
LN_INIT_BOUND = 2.0


def init_intensity_params(
    dim: int, heads: int, rng: RngState, key_dim: int | None = None
) -> IntensityPredictorParams:
    """Projections uniform in [-1/sqrt(dim), 1/sqrt(dim)]; wide layer-norm affine."""
    if dim < 1 or heads < 1:
        raise ValueError(f"dim and heads must be positive, got dim={dim}, heads={heads}")
    dk = key_dim if key_dim is not None else max(dim // heads, 1)
    bound = 1.0 / math.sqrt(dim)

    def draw(scale, *shape):
        size = int(np.prod(shape))
        return (rng.uniforms(size) * 2.0 - 1.0).reshape(shape) * scale

    return IntensityPredictorParams(
        w_q=draw(bound, heads, dim, dk),
        w_k=draw(bound, heads, dim, dk),
        w_v=draw(bound, heads, dim, dk),
        w_o=draw(bound, heads * dk, dim),
        ln_gain=draw(LN_INIT_BOUND, dim),
        ln_bias=draw(LN_INIT_BOUND, dim),
    )


class AttentionCache(NamedTuple):
    """Intermediates of one intensity forward pass, kept for the backward."""

    z: np.ndarray  # (B, dim) input features
    q: np.ndarray  # (heads, B, key_dim)
    k: np.ndarray  # (heads, B, key_dim)
    v: np.ndarray  # (heads, B, key_dim)
    attn: np.ndarray  # (heads, B, B) softmaxed scores
    concat: np.ndarray  # (B, heads * key_dim)
    resid: np.ndarray  # (B, dim) projection + residual, pre layer norm
    intensities: np.ndarray  # (B,)


def intensity_forward(
    params: IntensityPredictorParams, z: np.ndarray
) -> tuple[np.ndarray, AttentionCache]:
    """Run the predictor on latent features z (B x dim); returns (intensities, cache)."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != params.dim:
        raise ValueError(f"features must be (batch, {params.dim}), got shape {z.shape}")
    b = z.shape[0]
    h, dk = params.heads, params.key_dim
    scale = 1.0 / math.sqrt(dk)

    # All heads projected in one matmul each; (B, h*dk) -> (h, B, dk).
    def project(w):
        flat = kernels.matmul(z, w.transpose(1, 0, 2).reshape(params.dim, h * dk))
        return np.ascontiguousarray(flat.reshape(b, h, dk).transpose(1, 0, 2))

    q = project(params.w_q)
    k = project(params.w_k)
    v = project(params.w_v)
    scores = np.matmul(q, k.transpose(0, 2, 1)) * scale
    attn = kernels.softmax_rows(scores.reshape(h * b, b)).reshape(h, b, b)
    heads_out = np.matmul(attn, v)
    concat = np.ascontiguousarray(heads_out.transpose(1, 0, 2).reshape(b, h * dk))

    resid = kernels.matmul(concat, params.w_o) + z
    normed = kernels.layer_norm(resid, params.ln_gain, params.ln_bias)
    pooled = normed.mean(axis=1)
    intensities = np.tanh(pooled)
    cache = AttentionCache(z, q, k, v, attn, concat, resid, intensities)
    return intensities, cache


def predict_intensity(params: IntensityPredictorParams, batch: ModalityBatch) -> np.ndarray:
    """Per-sample emotional intensity in (-1, 1) for one modality batch."""
    intensities, _ = intensity_forward(params, batch.features)
    return intensities


def intensity_backward(
    params: IntensityPredictorParams, cache: AttentionCache, d_intensities: np.ndarray
) -> tuple[IntensityPredictorParams, np.ndarray]:
    """Backprop through the predictor; returns (parameter grads, d_features)."""
    z = cache.z
    b, dim = z.shape
    h, dk = params.heads, params.key_dim
    scale = 1.0 / math.sqrt(dk)
    grads = IntensityPredictorParams.zeros_like(params)

    d_pooled = np.asarray(d_intensities, dtype=np.float64) * (1.0 - cache.intensities**2)
    d_normed = np.broadcast_to(d_pooled[:, None] / dim, (b, dim))

    # Layer norm backward; mean/var recomputed from the cached residual.
    mean = cache.resid.mean(axis=1, keepdims=True)
    var = cache.resid.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + kernels.LAYER_NORM_EPS)
    xhat = (cache.resid - mean) * inv
    grads.ln_gain[:] = (d_normed * xhat).sum(axis=0)
    grads.ln_bias[:] = d_normed.sum(axis=0)
    d_xhat = d_normed * params.ln_gain
    d_resid = inv * (
        d_xhat
        - d_xhat.mean(axis=1, keepdims=True)
        - xhat * (d_xhat * xhat).mean(axis=1, keepdims=True)
    )

    d_z = d_resid.copy()  # residual branch
    grads.w_o[:] = cache.concat.T @ d_resid
    d_concat = d_resid @ params.w_o.T

    d_heads = np.ascontiguousarray(d_concat.reshape(b, h, dk).transpose(1, 0, 2))
    d_attn = np.matmul(d_heads, cache.v.transpose(0, 2, 1))
    d_v = np.matmul(cache.attn.transpose(0, 2, 1), d_heads)
    a = cache.attn
    d_scores = a * (d_attn - (d_attn * a).sum(axis=2, keepdims=True)) * scale
    d_q = np.matmul(d_scores, cache.k)
    d_k = np.matmul(d_scores.transpose(0, 2, 1), cache.q)
    grads.w_q[:] = np.matmul(z.T[None, :, :], d_q)
    grads.w_k[:] = np.matmul(z.T[None, :, :], d_k)
    grads.w_v[:] = np.matmul(z.T[None, :, :], d_v)
    d_z += np.matmul(d_q, params.w_q.transpose(0, 2, 1)).sum(axis=0)
    d_z += np.matmul(d_k, params.w_k.transpose(0, 2, 1)).sum(axis=0)
    d_z += np.matmul(d_v, params.w_v.transpose(0, 2, 1)).sum(axis=0)
    return grads, d_z


def intensity_to_weights(intensities, epsilon: float = MINMAX_EPSILON) -> np.ndarray:
    """Min-max weights, computed exactly as the formula is written.

    w_i = (|I_i| - min(I)) / (max(I) - min(I) + epsilon), with signed min/max,
    so values above 1 are possible when some intensities are negative. When
    the intensity spread collapses below DEGENERATE_RANGE the whole vector
    degenerates to zeros.
    """
    i = np.ascontiguousarray(intensities, dtype=np.float64)
    if i.ndim != 1 or i.size < 1:
        raise ValueError(f"intensities must be a non-empty vector, got shape {i.shape}")
    lo = i.min()
    hi = i.max()
    if hi - lo < DEGENERATE_RANGE:
        return np.zeros_like(i)
    return (np.abs(i) - lo) / (hi - lo + epsilon)


class WeightCache(NamedTuple):
    intensities: np.ndarray
    raw: np.ndarray
    clamp_mask: np.ndarray  # True where the raw weight survived the clamp
    denom: float
    argmin: int
    argmax: int
    degenerate: bool


def weights_forward(
    intensities: np.ndarray, epsilon: float = MINMAX_EPSILON
) -> tuple[np.ndarray, WeightCache]:
    """Clamped weights plus the cache needed to backprop through them."""
    i = np.ascontiguousarray(intensities, dtype=np.float64)
    lo = i.min()
    hi = i.max()
    if hi - lo < DEGENERATE_RANGE:
        raw = np.zeros_like(i)
        cache = WeightCache(i, raw, np.zeros_like(i, dtype=bool), 1.0, 0, 0, True)
        return raw, cache
    denom = hi - lo + epsilon
    raw = (np.abs(i) - lo) / denom
    clamp_mask = raw <= 1.0
    clamped = np.minimum(raw, 1.0)
    n_clamped = int((~clamp_mask).sum())
    if n_clamped:
        logger.debug("clamped %d min-max weights above 1 down to 1", n_clamped)
    cache = WeightCache(i, raw, clamp_mask, denom, int(i.argmin()), int(i.argmax()), False)
    return clamped, cache


def weights_backward(cache: WeightCache, d_weights: np.ndarray) -> np.ndarray:
    """Gradient of the clamped weights with respect to the intensities."""
    if cache.degenerate:
        return np.zeros_like(cache.intensities)
    d_raw = np.where(cache.clamp_mask, d_weights, 0.0)
    d_i = np.sign(cache.intensities) * d_raw / cache.denom
    d_i[cache.argmin] -= d_raw.sum() / cache.denom
    # Range term: raw/denom is d(raw)/d(denom) with opposite signs at argmax/argmin.
    range_pull = (d_raw * cache.raw).sum() / cache.denom
    d_i[cache.argmax] -= range_pull
    d_i[cache.argmin] += range_pull
    return d_i


@dataclass(frozen=True)
class IntensityOutput:
    """Predicted intensities with their (clamped) mixing weights."""

    intensities: np.ndarray
    weights: np.ndarray
    epsilon: float
    n_clamped: int = 0


def intensity_output(intensities, epsilon: float = MINMAX_EPSILON) -> IntensityOutput:
    """Bundle intensities with clamped weights, counting clamp events."""
    i = np.ascontiguousarray(intensities, dtype=np.float64)
    raw = intensity_to_weights(i, epsilon)
    n_clamped = int((raw > 1.0).sum())
    if n_clamped:
        logger.debug("clamped %d min-max weights above 1 down to 1", n_clamped)
    return IntensityOutput(
        intensities=i, weights=np.minimum(raw, 1.0), epsilon=epsilon, n_clamped=n_clamped
    )
