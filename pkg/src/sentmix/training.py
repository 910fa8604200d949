"""End-to-end training loop, evaluation, and experiment runners.

The loop wires the whole pipeline together per batch: encode, select pairs,
derive ratios, mix, and jointly update the backbone and the intensity
predictors from the weighted objective. All randomness flows from one seed
through fixed child-stream tags, so runs replay exactly.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, fields, replace

import numpy as np

from . import backbone as bb
from . import intensity as it
from .data import Dataset, dataset_fingerprint, occlude, split_dataset
from .features import MODALITIES
from .losses import LossBreakdown, LossWeights
from .metrics import MetricsReport, compute_metrics
from .mixing import random_pairs
from .objective import MixDraw, loss_and_grads
from .optim import Adam
from .rng import RngState, sample_beta
from .selection import select_pairs, similarity_matrix

MODES = ("no_augment", "vanilla_mix", "ms_mix")

# Child-stream tags; fixed so every run derives the same substreams.
SEED_SPLIT = 11
SEED_OCCLUDE = 12
SEED_BACKBONE = 13
SEED_PREDICTOR = 14
SEED_SHUFFLE = 15
SEED_SELECT = 16
SEED_LAMBDA = 17


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """All run hyperparameters; defaults follow the reference settings."""

    alpha: float = 2.0  # Beta shape for the base mixing ratio
    similarity_threshold: float = 0.2
    mix_loss_weight: float = 0.7
    sal_loss_weight: float = 0.5
    sal_scale: float = 1000.0
    minmax_epsilon: float = 1e-8
    attention_heads: int = 4
    epochs: int = 30
    batch_size: int = 48
    learning_rate: float = 1e-3
    seed: int = 0
    mode: str = "ms_mix"
    sass_on: bool = True
    sig_on: bool = True
    sal_on: bool = True
    occlusion_ratio: float = 0.0
    occlusion_mode: str = "entries"
    latent_dim: int = 32
    hidden_dim: int = 32

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.sal_on and not self.sig_on:
            raise ConfigError("sal_on requires sig_on: the alignment loss consumes the predictor output")
        if self.alpha <= 0.0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not -1.0 <= self.similarity_threshold <= 1.0:
            raise ConfigError(f"similarity_threshold must lie in [-1, 1], got {self.similarity_threshold}")
        if self.mix_loss_weight < 0.0 or self.sal_loss_weight < 0.0:
            raise ConfigError("loss weights must be non-negative")
        if self.sal_scale <= 0.0:
            raise ConfigError(f"sal_scale must be positive, got {self.sal_scale}")
        if self.minmax_epsilon <= 0.0:
            raise ConfigError(f"minmax_epsilon must be positive, got {self.minmax_epsilon}")
        if self.attention_heads < 1:
            raise ConfigError(f"attention_heads must be >= 1, got {self.attention_heads}")
        if self.epochs < 1 or self.batch_size < 2:
            raise ConfigError("epochs must be >= 1 and batch_size >= 2")
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.occlusion_ratio <= 0.4:
            raise ConfigError(f"occlusion_ratio must lie in [0, 0.4], got {self.occlusion_ratio}")
        if self.occlusion_mode not in ("entries", "modalities"):
            raise ConfigError(f"occlusion_mode must be 'entries' or 'modalities', got {self.occlusion_mode!r}")
        if self.latent_dim < 1 or self.hidden_dim < 1:
            raise ConfigError("latent_dim and hidden_dim must be >= 1")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @staticmethod
    def from_dict(values: dict) -> "TrainConfig":
        known = {f.name for f in fields(TrainConfig)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = TrainConfig(**values)
        cfg.validate()
        return cfg

    @property
    def weights(self) -> LossWeights:
        return LossWeights(
            mix_weight=self.mix_loss_weight,
            sal_weight=self.sal_loss_weight,
            sal_scale=self.sal_scale,
        )


@dataclass
class TrainResult:
    backbone: bb.BackboneParams
    predictors: dict[str, it.IntensityPredictorParams]
    report: MetricsReport  # validation metrics with the per-epoch loss trail
    step_losses: list[LossBreakdown]
    epoch_reports: list[MetricsReport]
    n_mixed_per_step: list[int]
    skipped_batches: int
    lam_min: float
    lam_max: float
    data_fingerprint: str
    config: TrainConfig


def evaluate(backbone_params: bb.BackboneParams, dataset: Dataset) -> MetricsReport:
    """Metrics of the backbone's predictions on one dataset split."""
    if dataset.n < 1:
        raise ValueError("cannot evaluate an empty split")
    latent, _ = bb.encode_forward(backbone_params, dataset.features)
    preds, _ = bb.fuse_forward(backbone_params, latent)
    return compute_metrics(preds, dataset.labels)


def _build_mix_draw(config, latent_batches, current_b, select_rng, lambda_rng):
    """Discrete augmentation choices for one batch; None means skip."""
    if config.mode == "no_augment" or current_b < 2:
        return None, 0
    if config.mode == "vanilla_mix" or not config.sass_on:
        selection = random_pairs(current_b, current_b, select_rng)
        skipped = 0
    else:
        report = similarity_matrix(latent_batches, config.similarity_threshold)
        selection = select_pairs(report, current_b, select_rng)
        skipped = 1 if selection.is_empty else 0
    if selection.is_empty:
        return None, skipped
    base = np.array([sample_beta(lambda_rng, config.alpha) for _ in range(selection.count)])
    use_sig = config.mode == "ms_mix" and config.sig_on
    return MixDraw(pairs=selection.pairs, lambda_base=base, use_sig=use_sig), skipped


def train(config: TrainConfig, dataset: Dataset) -> TrainResult:
    """Train the backbone (and, when active, the intensity predictors).

    The dataset is split 70/15/15 with a seeded shuffle; occlusion, when
    configured, corrupts the training split only. Returns the validation
    report plus the full step-level loss trail.
    """
    config.validate()
    root = RngState(config.seed)
    splits = split_dataset(dataset, root.child(SEED_SPLIT))
    train_split = splits["train"]
    if config.occlusion_ratio > 0.0:
        train_split = occlude(
            train_split, config.occlusion_ratio, root.child(SEED_OCCLUDE), config.occlusion_mode
        )
    for name in ("train", "val"):
        if splits[name].n < 1:
            raise ConfigError(f"{name} split is empty; dataset too small")

    backbone_params = bb.init_backbone(
        train_split.raw_dims, config.latent_dim, config.hidden_dim, root.child(SEED_BACKBONE)
    )
    predictor_rng = root.child(SEED_PREDICTOR)
    predictors = {
        m: it.init_intensity_params(config.latent_dim, config.attention_heads, predictor_rng.child(k))
        for k, m in enumerate(MODALITIES)
    }
    tree = backbone_params.tree("backbone")
    for m in MODALITIES:
        tree.update(predictors[m].tree(m))
    adam = Adam(tree, lr=config.learning_rate)

    shuffle_rng = root.child(SEED_SHUFFLE)
    select_rng = root.child(SEED_SELECT)
    lambda_rng = root.child(SEED_LAMBDA)
    weights = config.weights
    use_sal = config.mode == "ms_mix" and config.sal_on

    step_losses: list[LossBreakdown] = []
    n_mixed_per_step: list[int] = []
    epoch_reports: list[MetricsReport] = []
    trail: list[LossBreakdown] = []
    skipped = 0
    lam_min, lam_max = np.inf, -np.inf

    n_train = train_split.n
    for _epoch in range(config.epochs):
        order = shuffle_rng.permutation(n_train)
        epoch_losses: list[LossBreakdown] = []
        for start in range(0, n_train, config.batch_size):
            idx = order[start : start + config.batch_size]
            raw = {m: train_split.features[m][idx] for m in MODALITIES}
            y = train_split.labels[idx]
            current_b = idx.shape[0]

            latent = bb.encode(backbone_params, raw)
            mix_draw, was_skipped = _build_mix_draw(
                config, latent, current_b, select_rng, lambda_rng
            )
            skipped += was_skipped
            sal_this_step = use_sal and current_b >= 2
            result = loss_and_grads(
                backbone_params, predictors, raw, y, mix_draw, weights,
                use_sal=sal_this_step, minmax_epsilon=config.minmax_epsilon,
            )
            adam.step(result.grads)
            step_losses.append(result.losses)
            epoch_losses.append(result.losses)
            n_mixed_per_step.append(result.n_mixed)
            if result.lam is not None:
                for m in MODALITIES:
                    if result.lam[m].size:
                        lam_min = min(lam_min, float(result.lam[m].min()))
                        lam_max = max(lam_max, float(result.lam[m].max()))
        trail.append(_mean_breakdown(epoch_losses))
        epoch_reports.append(evaluate(backbone_params, splits["val"]))

    report = evaluate(backbone_params, splits["val"])
    report.loss_trail = trail
    return TrainResult(
        backbone=backbone_params,
        predictors=predictors,
        report=report,
        step_losses=step_losses,
        epoch_reports=epoch_reports,
        n_mixed_per_step=n_mixed_per_step,
        skipped_batches=skipped,
        lam_min=float(lam_min) if np.isfinite(lam_min) else 0.0,
        lam_max=float(lam_max) if np.isfinite(lam_max) else 1.0,
        data_fingerprint=dataset_fingerprint(dataset),
        config=config,
    )


def _mean_breakdown(losses: list[LossBreakdown]) -> LossBreakdown:
    if not losses:
        return LossBreakdown(0.0, 0.0, 0.0, 0.0)
    return LossBreakdown(
        task=float(np.mean([l.task for l in losses])),
        mix_mse=float(np.mean([l.mix_mse for l in losses])),
        sal=float(np.mean([l.sal for l in losses])),
        total=float(np.mean([l.total for l in losses])),
    )


ABLATION_VARIANTS = (
    ("vanilla_mix", dict(mode="vanilla_mix", sass_on=False, sig_on=False, sal_on=False)),
    ("sass", dict(mode="ms_mix", sass_on=True, sig_on=False, sal_on=False)),
    ("sig", dict(mode="ms_mix", sass_on=False, sig_on=True, sal_on=False)),
    ("sig_sal", dict(mode="ms_mix", sass_on=False, sig_on=True, sal_on=True)),
    ("sass_sig", dict(mode="ms_mix", sass_on=True, sig_on=True, sal_on=False)),
    ("full", dict(mode="ms_mix", sass_on=True, sig_on=True, sal_on=True)),
)


def run_ablation(config: TrainConfig, dataset: Dataset) -> list[dict]:
    """Train the six component combinations under one shared seed.

    The grid steps from the shared-ratio baseline through each component
    toggle up to the full configuration; every row records the seed and the
    data fingerprint so rows are comparable.
    """
    rows = []
    for name, flags in ABLATION_VARIANTS:
        cfg = replace(config, **flags)
        result = train(cfg, dataset)
        rows.append(_result_row(result, variant=name))
    return rows


def run_occlusion_sweep(
    config: TrainConfig, dataset: Dataset, ratios, modes=MODES
) -> list[dict]:
    """One train+evaluate per (ratio, mode) with shared seeds."""
    ratios = list(ratios)
    for r in ratios:
        if not 0.0 <= r <= 0.4:
            raise ValueError(f"occlusion ratio must lie in [0, 0.4], got {r}")
    rows = []
    for ratio in ratios:
        for mode in modes:
            cfg = replace(config, mode=mode, occlusion_ratio=float(ratio))
            result = train(cfg, dataset)
            row = _result_row(result, variant=mode)
            row["ratio"] = float(ratio)
            rows.append(row)
    return rows


def run_hyper_sweep(config: TrainConfig, dataset: Dataset, grid: dict[str, list]) -> list[dict]:
    """Cartesian sweep over config fields; one seeded train+eval per point."""
    if not grid:
        raise ValueError("hyperparameter grid must not be empty")
    known = {f.name for f in fields(TrainConfig)}
    for key in grid:
        if key not in known:
            raise ValueError(f"unknown config field in grid: {key!r}")
    names = list(grid.keys())
    rows = []
    for values in itertools.product(*(grid[name] for name in names)):
        cfg = replace(config, **dict(zip(names, values)))
        result = train(cfg, dataset)
        row = _result_row(result)
        for name, value in zip(names, values):
            row[name] = value
        rows.append(row)
    return rows


def _result_row(result: TrainResult, variant: str | None = None) -> dict:
    row = {}
    if variant is not None:
        row["variant"] = variant
    row.update(
        seed=result.config.seed,
        data_hash=result.data_fingerprint,
        mae=result.report.mae,
        acc2=result.report.acc2,
        w_acc2=result.report.w_acc2,
        acc5=result.report.acc5,
        acc7=result.report.acc7,
        f1=result.report.f1,
        w_f1=result.report.w_f1,
    )
    return row


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_steps_csv(path, step_losses: list[LossBreakdown]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "task", "mix_mse", "sal", "total"])
        for i, l in enumerate(step_losses):
            writer.writerow([i, _fmt(l.task), _fmt(l.mix_mse), _fmt(l.sal), _fmt(l.total)])


def write_epochs_csv(path, epoch_reports: list[MetricsReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mae", "acc2", "w_acc2", "acc5", "acc7", "f1", "w_f1"])
        for i, r in enumerate(epoch_reports):
            writer.writerow(
                [i, _fmt(r.mae), _fmt(r.acc2), _fmt(r.w_acc2), _fmt(r.acc5), _fmt(r.acc7),
                 _fmt(r.f1), _fmt(r.w_f1)]
            )


def write_rows_csv(path, rows: list[dict]) -> None:
    """Write experiment rows with a stable column order."""
    if not rows:
        raise ValueError("no rows to write")
    columns = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
