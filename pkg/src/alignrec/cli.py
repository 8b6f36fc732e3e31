import argparse
import json
import os
import sys
from typing import List, Union

from .dataset import (
    assign_groups,
    compute_popularity,
    filter_k_core,
    generate_synthetic,
    load_interactions,
    load_split,
    split_per_user,
    write_split,
)
from .embeddings import load_checkpoint, load_checkpoint_meta, save_checkpoint
from .evaluation import (
    angular_density_figure,
    angular_density_frame,
    audit_bundle,
    evaluate,
    exposure_figure,
    exposure_frame,
    summary_frame,
    write_report,
)
from .exceptions import (
    ArtifactMismatchError,
    EmptyDatasetError,
    ImproperlyConfigured,
    InputError,
    MissingPathError,
    TrainingAbortedError,
    ValidationError,
)
from .trainer import make_recommender
from .types import ExperimentConfig
from .utils import atomic_write, config_digest, log, read_config_file, write_json

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_TRAINING = 3
EXIT_MISMATCH = 4

CHECKPOINT_FILE = "model.ckpt"
TRAIN_LOG_FILE = "train_log.jsonl"
REPORT_FILE = "report.json"
AUDIT_FILE = "audit.json"
EXPOSURE_CSV = "exposure.csv"
DENSITY_CSV = "angular_density.csv"

# flag name -> config key
OVERRIDES = {
    "seed": "seed",
    "out": "out",
    "lambda1": "lambda1",
    "lambda2": "lambda2",
    "backbone": "backbone",
    "layers": "layers",
    "top_fraction": "top_fraction",
    "dim": "dim",
    "batch_size": "batch_size",
    "lr": "lr",
    "k": "ks",
    "epochs_max": "epochs_max",
    "patience": "patience",
    "dataset": "dataset",
    "data_dir": "data_dir",
    "checkpoint": "checkpoint",
    "synthetic": "synthetic",
    "angular_density": "angular_density",
    "users": "audit_users",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Path of a `key = value` config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="Output directory")
    common.add_argument("--data-dir", help="Directory of a prepared split (defaults to --out)")
    common.add_argument("--lambda1", type=float, help="Weight of the group-alignment term")
    common.add_argument("--lambda2", type=float, help="Weight of the global-uniformity term")
    common.add_argument("--backbone", choices=["bprmf", "lightgcn"])
    common.add_argument("--layers", type=int)
    common.add_argument("--top-fraction", type=float)
    common.add_argument("--dim", type=int)
    common.add_argument("--batch-size", type=int)
    common.add_argument("--lr", type=float)
    common.add_argument("--k", help="Comma-separated cutoffs, e.g. 10,20")
    common.add_argument("--epochs-max", type=int)
    common.add_argument("--patience", type=int)

    parser = argparse.ArgumentParser(prog="alignrec", description="Debiased collaborative filtering toolkit")
    commands = parser.add_subparsers(dest="command", required=True)

    prepare = commands.add_parser("prepare", parents=[common], help="Filter, split and group a dataset")
    prepare.add_argument("--dataset", help="Raw interaction file")
    prepare.add_argument("--synthetic", action="store_true", default=None,
                         help="Generate a popularity-skewed dataset instead of reading one")

    commands.add_parser("train", parents=[common], help="Train a backbone on a prepared split")

    evaluate_cmd = commands.add_parser("evaluate", parents=[common], help="Write the metric report")
    evaluate_cmd.add_argument("--checkpoint")

    audit = commands.add_parser("audit", parents=[common], help="Write bias diagnostics")
    audit.add_argument("--checkpoint")
    audit.add_argument("--angular-density", action="store_true", default=None)
    audit.add_argument("--users", help="Comma-separated raw user IDs to report individually")

    return parser


def build_config(args: argparse.Namespace) -> dict:
    config = {}
    if args.config:
        config.update(read_config_file(args.config))
    for flag, key in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            config[key] = value
    return config


def _load_data(exp: ExperimentConfig):
    split, pop, groups, manifest = load_split(exp.data_dir)
    if abs(exp.train.top_fraction - groups.top_fraction) > 1e-12:
        groups = assign_groups(pop, exp.train.top_fraction)
    return split, pop, groups, manifest


def cmd_prepare(config: dict) -> dict:
    exp = ExperimentConfig.from_config(config)
    seed = exp.train.seed
    if exp.synthetic:
        raw = generate_synthetic(
            num_users=exp.num_users,
            num_items=exp.num_items,
            num_interactions=exp.num_interactions,
            zipf_exponent=exp.zipf_exponent,
            activity_skew=exp.activity_skew,
            num_clusters=exp.num_clusters,
            affinity=exp.affinity,
            cluster_zipf_exponent=exp.cluster_zipf_exponent,
            seed=seed,
        )
        source = "synthetic"
    else:
        if not exp.dataset:
            raise ImproperlyConfigured("prepare needs --dataset PATH or --synthetic")
        if not os.path.exists(exp.dataset):
            raise MissingPathError(exp.dataset)
        raw = load_interactions(exp.dataset)
        source = os.path.basename(exp.dataset)

    filtered = filter_k_core(raw, exp.k_core)
    if len(filtered) == 0:
        raise EmptyDatasetError(f"Nothing survives the {exp.k_core}-core filter")
    log(title="Prepare", message=f"{filtered.num_users} users, {filtered.num_items} items, "
                                 f"{len(filtered)} interactions after {exp.k_core}-core")

    split = split_per_user(filtered, exp.split_ratios, seed=seed)
    pop = compute_popularity(split.train)
    groups = assign_groups(pop, exp.train.top_fraction)
    return write_split(exp.out, split, pop, groups, k_core=exp.k_core, source=source)


def cmd_train(config: dict) -> List[dict]:
    exp = ExperimentConfig.from_config(config)
    split, _, groups, _ = _load_data(exp)
    os.makedirs(exp.out, exist_ok=True)

    recommender = make_recommender(config)
    snapshot = recommender.train_config.to_dict()
    checkpoint_path = os.path.join(exp.out, CHECKPOINT_FILE)
    log_path = os.path.join(exp.out, TRAIN_LOG_FILE)
    lines = []
    atomic_write(log_path, "")

    def on_epoch(record):
        lines.append(json.dumps(record, sort_keys=True))
        atomic_write(log_path, "\n".join(lines) + "\n")

    def on_improve(state, record):
        save_checkpoint(state, checkpoint_path, metadata={
            "config": snapshot,
            "config_digest": config_digest(snapshot),
            "epoch": record["epoch"],
            "val_ndcg": record[f"val_ndcg{recommender.train_config.eval_k}"],
            "M": state.num_users,
            "N": state.num_items,
            "D": state.dim,
        })

    _, history = recommender.fit(split, groups, on_epoch=on_epoch, on_improve=on_improve)
    return history


def _load_model(exp: ExperimentConfig, config: dict, split, manifest):
    checkpoint_path = exp.checkpoint or os.path.join(exp.out, CHECKPOINT_FILE)
    if not os.path.exists(checkpoint_path):
        raise MissingPathError(checkpoint_path)
    state = load_checkpoint(checkpoint_path)
    if (state.num_users, state.num_items) != (int(manifest["M"]), int(manifest["N"])):
        raise ArtifactMismatchError(
            f"Checkpoint is {state.num_users}x{state.num_items}x{state.dim}, "
            f"split has M={manifest['M']} N={manifest['N']}"
        )

    model_config = dict(config)
    model_config.update(load_checkpoint_meta(checkpoint_path).get("config", {}))
    model_config["verbose"] = False
    recommender = make_recommender(model_config)
    recommender.load_state(state, split.train)
    return recommender


def cmd_evaluate(config: dict):
    exp = ExperimentConfig.from_config(config)
    split, pop, groups, manifest = _load_data(exp)
    recommender = _load_model(exp, config, split, manifest)

    report = evaluate(recommender, split, groups, pop, ks=exp.ks, seed=exp.train.seed)
    write_report(os.path.join(exp.out, REPORT_FILE), report)
    print(summary_frame(report).to_markdown(index=False))
    return report


def cmd_audit(config: dict) -> dict:
    exp = ExperimentConfig.from_config(config)
    split, pop, groups, manifest = _load_data(exp)
    recommender = _load_model(exp, config, split, manifest)
    k = max(exp.ks)

    bundle = audit_bundle(recommender, split, groups, k=k, seed=exp.train.seed, users=exp.audit_users)
    exposure = exposure_frame({str(k): bundle["group_exposure"]}, bundle["exposure_baseline"])
    atomic_write(os.path.join(exp.out, EXPOSURE_CSV), exposure.to_csv(index=False))
    atomic_write(os.path.join(exp.out, "exposure.html"),
                 exposure_figure(exposure).to_html(include_plotlyjs="cdn"))

    if bundle["dim"] == 2:
        density = angular_density_frame(recommender, groups, bandwidth=exp.density_bandwidth)
        atomic_write(os.path.join(exp.out, DENSITY_CSV), density.to_csv(index=False))
        atomic_write(os.path.join(exp.out, "angular_density.html"),
                     angular_density_figure(density).to_html(include_plotlyjs="cdn"))
        bundle["angular_density"] = DENSITY_CSV
    elif exp.angular_density:
        log(title="Warning", message=f"angular density needs D=2, checkpoint has D={bundle['dim']}; skipped")

    write_json(os.path.join(exp.out, AUDIT_FILE), bundle)
    return bundle


COMMANDS = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "audit": cmd_audit,
}


def main(argv: Union[List[str], None] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
        COMMANDS[args.command](config)
    except (InputError, ImproperlyConfigured, ValidationError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except TrainingAbortedError as e:
        print(f"Training aborted: {e} {json.dumps(e.diagnostics, default=str)}", file=sys.stderr)
        return EXIT_TRAINING
    except ArtifactMismatchError as e:
        print(f"Artifact mismatch: {e}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK
