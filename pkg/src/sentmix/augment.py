"""One-shot augmentation of a latent batch: select, weigh, mix.

This is the inspection-friendly composition of the pipeline pieces; the
training loop reproduces the same numbers through the differentiable
objective.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .features import MODALITIES, ModalityBatch, shared_batch_size
from .intensity import (
    MINMAX_EPSILON,
    IntensityOutput,
    IntensityPredictorParams,
    intensity_output,
    predict_intensity,
)
from .mixing import MixedBatch, MixPlan, build_mix_plan, build_shared_plan, mix_batch, random_pairs
from .rng import RngState
from .selection import (
    DEFAULT_THRESHOLD,
    PairSelection,
    SimilarityReport,
    select_pairs,
    similarity_matrix,
)


@dataclass(frozen=True)
class AugmentResult:
    report: SimilarityReport | None
    selection: PairSelection
    outputs: dict[str, IntensityOutput] | None
    plan: MixPlan
    mixed: MixedBatch | None  # None when the selection came back empty

    @property
    def skipped(self) -> bool:
        return self.mixed is None


def augment_batch(
    batches: Mapping[str, ModalityBatch],
    labels,
    predictors: Mapping[str, IntensityPredictorParams] | None,
    select_rng: RngState,
    lambda_rng: RngState,
    *,
    alpha: float = 2.0,
    threshold: float = DEFAULT_THRESHOLD,
    use_sass: bool = True,
    use_sig: bool = True,
    target: int | None = None,
    minmax_epsilon: float = MINMAX_EPSILON,
) -> AugmentResult:
    """Run the full augmentation step on one latent batch.

    With ``use_sass`` the pair pool is gated by the averaged cross-modal
    similarity; otherwise pairing is random. With ``use_sig`` the ratios are
    driven by the intensity predictors; otherwise one shared base ratio per
    pair is used for all modalities and the label.
    """
    b = shared_batch_size(batches)
    target = b if target is None else target
    report = None
    if use_sass:
        report = similarity_matrix(batches, threshold)
        selection = select_pairs(report, target, select_rng)
    else:
        selection = random_pairs(b, target, select_rng)

    outputs = None
    if use_sig:
        if predictors is None:
            raise ValueError("intensity predictors are required when use_sig is set")
        outputs = {
            m: intensity_output(predict_intensity(predictors[m], batches[m]), minmax_epsilon)
            for m in MODALITIES
        }
        plan = build_mix_plan(selection, outputs, lambda_rng, alpha)
    else:
        plan = build_shared_plan(selection, lambda_rng, alpha)

    mixed = mix_batch(plan, batches, labels) if plan.count else None
    return AugmentResult(report=report, selection=selection, outputs=outputs, plan=plan, mixed=mixed)
