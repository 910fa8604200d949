"""Joint objective: forward pass, loss breakdown, and analytic gradients.

One call covers a whole training step's math. The discrete augmentation
choices (which pairs, which base ratios) are inputs, so the objective is a
deterministic, differentiable function of the parameters; gradients flow
through the mixed features, through the adaptive ratios into the intensity
predictors, and through the alignment term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import backbone as bb
from . import intensity as it
from .features import MODALITIES
from .losses import LossBreakdown, LossWeights, batch_softmax, kl_divergence, total_loss
from .mixing import ratios_backward, ratios_forward


@dataclass(frozen=True)
class MixDraw:
    """The stochastic part of one augmentation step, held fixed during grads.

    ``use_sig`` selects adaptive ratios from the intensity predictors; when
    False every modality reuses ``lambda_base`` unchanged (shared-ratio
    baseline and the predictor receives no gradient through the mix path).
    """

    pairs: np.ndarray  # (P, 2) int64
    lambda_base: np.ndarray  # (P,)
    use_sig: bool

    @property
    def count(self) -> int:
        return self.pairs.shape[0]


@dataclass
class StepResult:
    losses: LossBreakdown
    grads: dict[str, np.ndarray] | None
    n_mixed: int
    n_clamped: int
    lam: dict[str, np.ndarray] | None
    lam_label: np.ndarray | None


def evaluate_total_loss(
    backbone_params: bb.BackboneParams,
    predictor_params: Mapping[str, it.IntensityPredictorParams] | None,
    raw: Mapping[str, np.ndarray],
    labels: np.ndarray,
    mix: MixDraw | None,
    weights: LossWeights,
    use_sal: bool,
    minmax_epsilon: float = it.MINMAX_EPSILON,
) -> LossBreakdown:
    """Forward-only evaluation of the joint objective."""
    return _run(
        backbone_params, predictor_params, raw, labels, mix, weights, use_sal,
        minmax_epsilon, with_grads=False,
    ).losses


def loss_and_grads(
    backbone_params: bb.BackboneParams,
    predictor_params: Mapping[str, it.IntensityPredictorParams] | None,
    raw: Mapping[str, np.ndarray],
    labels: np.ndarray,
    mix: MixDraw | None,
    weights: LossWeights,
    use_sal: bool,
    minmax_epsilon: float = it.MINMAX_EPSILON,
) -> StepResult:
    """Joint loss plus analytic gradients for every parameter array."""
    return _run(
        backbone_params, predictor_params, raw, labels, mix, weights, use_sal,
        minmax_epsilon, with_grads=True,
    )


def _run(
    bparams: bb.BackboneParams,
    pparams: Mapping[str, it.IntensityPredictorParams] | None,
    raw: Mapping[str, np.ndarray],
    labels: np.ndarray,
    mix: MixDraw | None,
    weights: LossWeights,
    use_sal: bool,
    minmax_epsilon: float,
    with_grads: bool,
) -> StepResult:
    labels = np.asarray(labels, dtype=np.float64)
    batch = labels.shape[0]
    mixing_active = mix is not None and mix.count > 0
    use_sig = mixing_active and mix.use_sig
    needs_intensity = use_sal or use_sig
    if needs_intensity and pparams is None:
        raise ValueError("intensity predictors are required when SIG or SAL is active")

    # ---- forward --------------------------------------------------------
    latent, enc_cache = bb.encode_forward(bparams, raw)
    preds, fuse_cache = bb.fuse_forward(bparams, latent)
    task = float(np.mean((preds - labels) ** 2))

    intens: dict[str, np.ndarray] = {}
    attn_caches: dict[str, it.AttentionCache] = {}
    weight_caches: dict[str, it.WeightCache] = {}
    ratio_caches: dict[str, object] = {}
    lam: dict[str, np.ndarray] = {}
    n_clamped = 0
    if needs_intensity:
        for m in MODALITIES:
            intens[m], attn_caches[m] = it.intensity_forward(pparams[m], latent[m])

    mix_term = 0.0
    lam_label = None
    if mixing_active:
        pairs = mix.pairs
        if use_sig:
            for m in MODALITIES:
                w_m, weight_caches[m] = it.weights_forward(intens[m], minmax_epsilon)
                n_clamped += int((~weight_caches[m].clamp_mask).sum())
                lam[m], ratio_caches[m] = ratios_forward(w_m, pairs, mix.lambda_base)
        else:
            lam = {m: mix.lambda_base.copy() for m in MODALITIES}
        lam_label = sum(lam[m] for m in MODALITIES) / float(len(MODALITIES))

        mixed_latent = {}
        for m in MODALITIES:
            z = latent[m]
            lm = lam[m][:, None]
            mixed_latent[m] = lm * z[pairs[:, 0]] + (1.0 - lm) * z[pairs[:, 1]]
        mixed_preds, mixed_fuse_cache = bb.fuse_forward(bparams, mixed_latent)
        y_i = labels[pairs[:, 0]]
        y_j = labels[pairs[:, 1]]
        mix_term = float(
            np.mean(lam_label * (mixed_preds - y_i) ** 2 + (1.0 - lam_label) * (mixed_preds - y_j) ** 2)
        )

    sal_term = 0.0
    if use_sal:
        p_label = batch_softmax(labels)
        for m in MODALITIES:
            sal_term += kl_divergence(p_label, batch_softmax(intens[m]))
        sal_term *= weights.sal_scale

    losses = total_loss(task, mix_term, sal_term, weights)
    if not with_grads:
        return StepResult(losses, None, mix.count if mixing_active else 0, n_clamped,
                          lam or None, lam_label)

    # ---- backward -------------------------------------------------------
    bgrads_total = bb.BackboneParams.zeros_like(bparams)
    d_preds = 2.0 * (preds - labels) / batch
    bgrads, d_latent = bb.fuse_backward(bparams, fuse_cache, d_preds)
    _accumulate_backbone(bgrads_total, bgrads)
    d_latent_total = {m: d_latent[m].copy() for m in MODALITIES}

    d_intens = {m: np.zeros(batch) for m in MODALITIES} if needs_intensity else {}

    if mixing_active:
        count = mix.count
        r_i = mixed_preds - y_i
        r_j = mixed_preds - y_j
        d_mixed_preds = weights.mix_weight * 2.0 * (lam_label * r_i + (1.0 - lam_label) * r_j) / count
        bgrads, d_mixed_latent = bb.fuse_backward(bparams, mixed_fuse_cache, d_mixed_preds)
        _accumulate_backbone(bgrads_total, bgrads)
        # The label ratio also appears as an explicit coefficient of the two
        # squared errors, contributing its own gradient.
        d_lam_label = weights.mix_weight * (r_i**2 - r_j**2) / count
        for m in MODALITIES:
            z = latent[m]
            i_idx = mix.pairs[:, 0]
            j_idx = mix.pairs[:, 1]
            lm = lam[m][:, None]
            dm = d_mixed_latent[m]
            np.add.at(d_latent_total[m], i_idx, lm * dm)
            np.add.at(d_latent_total[m], j_idx, (1.0 - lm) * dm)
            if use_sig:
                d_lam_m = ((z[i_idx] - z[j_idx]) * dm).sum(axis=1) + d_lam_label / len(MODALITIES)
                d_w = ratios_backward(ratio_caches[m], d_lam_m)
                d_intens[m] += it.weights_backward(weight_caches[m], d_w)

    if use_sal:
        p_label = batch_softmax(labels)
        coeff = weights.sal_weight * weights.sal_scale / batch
        for m in MODALITIES:
            d_intens[m] += coeff * (batch_softmax(intens[m]) - p_label)

    pgrads_tree: dict[str, np.ndarray] = {}
    if needs_intensity:
        for m in MODALITIES:
            pg, d_z = it.intensity_backward(pparams[m], attn_caches[m], d_intens[m])
            d_latent_total[m] += d_z
            pgrads_tree.update(pg.tree(m))
    elif pparams is not None:
        for m in MODALITIES:
            pgrads_tree.update(it.IntensityPredictorParams.zeros_like(pparams[m]).tree(m))

    egrads = bb.encode_backward(bparams, enc_cache, d_latent_total)
    _accumulate_backbone(bgrads_total, egrads)

    grads = bgrads_total.tree("backbone")
    grads.update(pgrads_tree)
    return StepResult(losses, grads, mix.count if mixing_active else 0, n_clamped,
                      lam or None, lam_label)


def _accumulate_backbone(total: bb.BackboneParams, part: bb.BackboneParams) -> None:
    for m in MODALITIES:
        total.enc_w[m] += part.enc_w[m]
        total.enc_b[m] += part.enc_b[m]
    total.fus_w += part.fus_w
    total.fus_b += part.fus_b
    total.head_w += part.head_w
    total.head_b += part.head_b
