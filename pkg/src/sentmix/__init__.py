"""Sentiment-aware multimodal mixup augmentation.

Latent-space mixing for three-modality sentiment regression: similarity-gated
pair selection, attention-predicted per-modality mixing ratios, and a
KL-based alignment regularizer, wired into a small trainable backbone with
analytic gradients.
"""

from .augment import AugmentResult, augment_batch
from .backbone import BackboneParams, encode, fuse_predict, init_backbone
from .data import Dataset, SynthConfig, generate, load, occlude, save, split_dataset
from .features import MODALITIES, ModalityBatch, tri_batch
from .intensity import (
    IntensityOutput,
    IntensityPredictorParams,
    init_intensity_params,
    intensity_to_weights,
    predict_intensity,
)
from .kernels import BACKEND, l2_normalize_rows, layer_norm, matmul, softmax_rows
from .losses import (
    LossBreakdown,
    LossWeights,
    batch_softmax,
    kl_divergence,
    mix_mse,
    sal_loss,
    task_mse,
    total_loss,
)
from .metrics import MetricsReport, compute_metrics
from .mixing import (
    MixedBatch,
    MixPlan,
    build_mix_plan,
    mix_batch,
    mix_features,
    mix_labels,
    pair_ratio,
    vanilla_latent_mix,
)
from .rng import RngState, sample_beta
from .selection import PairSelection, SimilarityReport, select_pairs, similarity_matrix
from .training import (
    TrainConfig,
    TrainResult,
    evaluate,
    run_ablation,
    run_hyper_sweep,
    run_occlusion_sweep,
    train,
)

__version__ = "0.1.0"
