"""Command-line entry point: data generation, training, evaluation, sweeps.

Exit codes: 0 success, 1 usage error (bad flags, unknown subcommand,
unreadable config, invalid override), 2 runtime failure. Every run writes
``effective_config.json`` and a seed record into its output directory, and
touches nothing outside it.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import backbone as bb
from . import intensity as it
from .augment import augment_batch
from .data import (
    DEFAULT_NOISE_SIGMA,
    DEFAULT_RAW_DIM,
    Dataset,
    DatasetFormatError,
    SynthConfig,
    generate,
    load,
    save,
    split_dataset,
)
from .features import MODALITIES
from .rng import RngState
from .training import (
    MODES,
    SEED_BACKBONE,
    SEED_LAMBDA,
    SEED_PREDICTOR,
    SEED_SELECT,
    SEED_SPLIT,
    ConfigError,
    TrainConfig,
    evaluate,
    run_ablation,
    run_hyper_sweep,
    run_occlusion_sweep,
    train,
    write_epochs_csv,
    write_rows_csv,
    write_steps_csv,
)

DEFAULT_OCCLUSION_RATIOS = (0.0, 0.1, 0.2, 0.3, 0.4)
DEFAULT_HYPER_GRID = {"similarity_threshold": [0.0, 0.1, 0.2, 0.3, 0.4]}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through exit code 1."""

    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _config_flag_parsers() -> dict[str, object]:
    parsers = {}
    for f in fields(TrainConfig):
        default = f.default
        if isinstance(default, bool):
            parsers[f.name] = _parse_bool
        elif isinstance(default, int):
            parsers[f.name] = int
        elif isinstance(default, float):
            parsers[f.name] = float
        else:
            parsers[f.name] = str
    return parsers


_FLAG_PARSERS = _config_flag_parsers()


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    for name, typ in _FLAG_PARSERS.items():
        parser.add_argument(f"--{name.replace('_', '-')}", type=typ, default=None, dest=name)


def _effective_config(args) -> TrainConfig:
    values: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            with open(path) as fh:
                values.update(json.load(fh))
        except OSError as exc:
            raise UsageError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    for name in _FLAG_PARSERS:
        override = getattr(args, name, None)
        if override is not None:
            values[name] = override
    try:
        return TrainConfig.from_dict(values)
    except (ConfigError, TypeError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc


def _prepare_out_dir(out) -> Path:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _write_run_record(out_dir: Path, config_dict: dict, extra: dict | None = None) -> None:
    doc = dict(config_dict)
    if extra:
        doc.update(extra)
    with open(out_dir / "effective_config.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out_dir / "seed.txt", "w") as fh:
        fh.write(f"{config_dict.get('seed', 0)}\n")


def _load_dataset(path) -> Dataset:
    try:
        return load(path)
    except FileNotFoundError as exc:
        raise UsageError(f"cannot read dataset file {path}: {exc}") from exc


def cmd_gen_data(args) -> int:
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    config = SynthConfig(
        n=args.n,
        raw_dims={m: args.raw_dim for m in MODALITIES},
        noise_sigma=args.sigma,
        seed=args.seed,
    )
    save(generate(config), out_path)
    _write_run_record(
        out_path.parent,
        {"subcommand": "gen-data", "n": args.n, "raw_dim": args.raw_dim,
         "sigma": args.sigma, "seed": args.seed, "out": str(out_path)},
    )
    print(f"wrote dataset with {args.n} samples to {out_path}")
    return 0


def cmd_train(args) -> int:
    config = _effective_config(args)
    dataset = _load_dataset(args.data)
    out_dir = _prepare_out_dir(args.out)
    _write_run_record(out_dir, config.to_dict(), {"subcommand": "train", "data": str(args.data)})
    result = train(config, dataset)
    write_steps_csv(out_dir / "steps.csv", result.step_losses)
    write_epochs_csv(out_dir / "epochs.csv", result.epoch_reports)
    with open(out_dir / "report.json", "w") as fh:
        json.dump(result.report.to_dict(), fh, indent=2)
        fh.write("\n")
    bb.save_checkpoint(out_dir / "checkpoint.json", result.backbone, result.predictors,
                       config.to_dict())
    print(f"val MAE {result.report.mae:.4f}  ACC2 {result.report.acc2:.4f}  -> {out_dir}")
    return 0


def cmd_eval(args) -> int:
    backbone_params, _predictors, stored = bb.load_checkpoint(args.checkpoint)
    dataset = _load_dataset(args.data)
    seed = int(stored.get("seed", 0))
    if args.split == "all":
        part = dataset
    else:
        part = split_dataset(dataset, RngState(seed).child(SEED_SPLIT))[args.split]
    report = evaluate(backbone_params, part)
    out_dir = _prepare_out_dir(args.out)
    _write_run_record(out_dir, dict(stored),
                      {"subcommand": "eval", "split": args.split, "data": str(args.data)})
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    print(f"{args.split} MAE {report.mae:.4f}  ACC2 {report.acc2:.4f}  -> {out_dir}")
    return 0


def cmd_augment_dump(args) -> int:
    config = _effective_config(args)
    dataset = _load_dataset(args.data)
    out_dir = _prepare_out_dir(args.out)
    _write_run_record(out_dir, config.to_dict(),
                      {"subcommand": "augment-dump", "data": str(args.data)})

    root = RngState(config.seed)
    if args.checkpoint:
        backbone_params, predictors, _ = bb.load_checkpoint(args.checkpoint)
        if predictors is None:
            raise ValueError("checkpoint carries no intensity predictors")
    else:
        backbone_params = bb.init_backbone(
            dataset.raw_dims, config.latent_dim, config.hidden_dim, root.child(SEED_BACKBONE)
        )
        predictor_rng = root.child(SEED_PREDICTOR)
        predictors = {
            m: it.init_intensity_params(config.latent_dim, config.attention_heads,
                                        predictor_rng.child(k))
            for k, m in enumerate(MODALITIES)
        }

    take = min(config.batch_size, dataset.n)
    raw = {m: dataset.features[m][:take] for m in MODALITIES}
    labels = dataset.labels[:take]
    latent = bb.encode(backbone_params, raw)
    result = augment_batch(
        latent, labels, predictors, root.child(SEED_SELECT), root.child(SEED_LAMBDA),
        alpha=config.alpha, threshold=config.similarity_threshold,
        use_sass=config.sass_on, use_sig=config.sig_on,
        minmax_epsilon=config.minmax_epsilon,
    )
    doc = {
        "batch_size": take,
        "skipped": result.skipped,
        "pairs": [[int(i), int(j)] for i, j in result.plan.pairs],
        "lambda_base": [float(x) for x in result.plan.lambda_base],
        "lam": {m: [float(x) for x in result.plan.lam[m]] for m in MODALITIES},
        "lam_label": [float(x) for x in result.plan.lam_label],
        "mean_offdiag": None if result.report is None else result.report.mean_offdiag,
        "mixed_labels": [] if result.mixed is None else [float(x) for x in result.mixed.labels],
        "mixed_features": {}
        if result.mixed is None
        else {m: [[float(v) for v in row] for row in result.mixed.features[m]] for m in MODALITIES},
    }
    with open(out_dir / "augment_dump.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"dumped {result.plan.count} mixed pairs -> {out_dir}")
    return 0


def cmd_ablate(args) -> int:
    config = _effective_config(args)
    dataset = _load_dataset(args.data)
    out_dir = _prepare_out_dir(args.out)
    _write_run_record(out_dir, config.to_dict(), {"subcommand": "ablate", "data": str(args.data)})
    rows = run_ablation(config, dataset)
    write_rows_csv(out_dir / "ablation.csv", rows)
    for row in rows:
        print(f"{row['variant']:>12}  MAE {row['mae']:.4f}  ACC2 {row['acc2']:.4f}")
    return 0


def cmd_occlusion_sweep(args) -> int:
    config = _effective_config(args)
    dataset = _load_dataset(args.data)
    ratios = [float(x) for x in args.ratios.split(",")] if args.ratios else list(DEFAULT_OCCLUSION_RATIOS)
    modes = args.modes.split(",") if args.modes else list(MODES)
    for mode in modes:
        if mode not in MODES:
            raise UsageError(f"unknown mode {mode!r}, expected one of {MODES}")
    out_dir = _prepare_out_dir(args.out)
    _write_run_record(out_dir, config.to_dict(),
                      {"subcommand": "occlusion-sweep", "data": str(args.data),
                       "ratios": ratios, "modes": modes})
    rows = run_occlusion_sweep(config, dataset, ratios, modes)
    write_rows_csv(out_dir / "occlusion.csv", rows)
    print(f"wrote {len(rows)} rows ({len(ratios)} ratios x {len(modes)} modes) -> {out_dir}")
    return 0


def cmd_hyper_sweep(args) -> int:
    config = _effective_config(args)
    dataset = _load_dataset(args.data)
    grid: dict[str, list] = {}
    for spec in args.param or []:
        if "=" not in spec:
            raise UsageError(f"--param expects name=v1,v2,..., got {spec!r}")
        name, _, raw_values = spec.partition("=")
        name = name.strip().replace("-", "_")
        if name not in _FLAG_PARSERS:
            raise UsageError(f"unknown config field {name!r} in --param")
        typ = _FLAG_PARSERS[name]
        try:
            grid[name] = [typ(v) for v in raw_values.split(",") if v != ""]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"bad values for --param {name}: {exc}") from exc
        if not grid[name]:
            raise UsageError(f"--param {name} lists no values")
    if not grid:
        grid = {k: list(v) for k, v in DEFAULT_HYPER_GRID.items()}
    out_dir = _prepare_out_dir(args.out)
    _write_run_record(out_dir, config.to_dict(),
                      {"subcommand": "hyper-sweep", "data": str(args.data),
                       "grid": {k: list(v) for k, v in grid.items()}})
    rows = run_hyper_sweep(config, dataset, grid)
    write_rows_csv(out_dir / "hyper_sweep.csv", rows)
    print(f"wrote {len(rows)} sweep rows -> {out_dir}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="sentmix", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=DEFAULT_NOISE_SIGMA)
    p.add_argument("--raw-dim", type=int, default=DEFAULT_RAW_DIM)
    p.add_argument("--out", required=True, help="dataset file path")
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("train", help="train on a dataset file")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("augment-dump", help="dump one batch's mixing plan as JSON")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_augment_dump)

    p = sub.add_parser("ablate", help="run the six-component ablation grid")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser("occlusion-sweep", help="train across occlusion ratios and modes")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--ratios", default=None, help="comma-separated ratios in [0, 0.4]")
    p.add_argument("--modes", default=None, help="comma-separated subset of modes")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_occlusion_sweep)

    p = sub.add_parser("hyper-sweep", help="grid sweep over config fields")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--param", action="append",
                   help="name=v1,v2,... (repeatable; cartesian product)")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_hyper_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DatasetFormatError, ConfigError, ValueError, OSError, KeyError) as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
