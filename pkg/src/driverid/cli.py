"""Command-line front end.

Subcommands: ``rank``, ``train``, ``eval``, ``predict``, ``synth``.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
invariant violation.  Every output artifact embeds the seed and a digest
of the run configuration; identical configurations produce byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

from . import evaluation, pipeline, synth
from ._kernels import BACKEND
from .base import ConfigError, DataError, DriverIdError, EmptyDatasetError
from .dataset import (
    IngestConfig,
    decompose_timestamp,
    exclude_sparse_drivers,
    parse_csv,
)
from .selection import (
    apply_selection,
    rank_features,
    ranking_csv,
    ranking_report,
)
from .tree import TreeParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _add_data_flags(p):
    p.add_argument("--dataset", required=True, help="trip-log CSV file")
    p.add_argument("--ingest-config", required=True,
                   help="key-value ingestion config file")
    p.add_argument("--exclude-sparse", nargs="?", const=100, default=None,
                   type=int, metavar="N",
                   help="drop drivers with fewer than N rows (default N=100)")
    p.add_argument("--no-decompose", action="store_true",
                   help="skip timestamp decomposition")


def _add_run_flags(p, with_task=True):
    if with_task:
        p.add_argument("--task", required=True,
                       help="multi | owner:<driver id> | owner-all (eval only)")
    p.add_argument("--learner", choices=pipeline.LEARNERS, default="rf")
    p.add_argument("--fs", choices=("paradigm", "individual", "off"),
                   default="paradigm", help="feature-selection rule")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=None,
                   help="random-forest tree count (default 100)")
    p.add_argument("--features-per-node", type=int, default=None,
                   help="random-forest per-node feature subset size"
                        " (default floor(sqrt(#predictors)))")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker count for forest training (outputs identical"
                        " for any value)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driverid",
        description="Driver identification from timestamped vehicle telemetry"
                    f" (kernel backend: {BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", help="rank features by gain ratio and report the subset")
    _add_data_flags(p)
    p.add_argument("--fs", choices=("paradigm", "individual", "off"), default="paradigm")
    p.add_argument("--task", default="multi",
                   help="ranking labels: multi (driver ids) or owner:<id> (binary)")
    p.add_argument("--out", default=None, help="directory for ranking.txt/ranking.csv")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("train", help="train a model and persist it as a bundle")
    _add_data_flags(p)
    _add_run_flags(p)
    p.add_argument("--out", required=True, help="bundle output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="cross-validated evaluation")
    _add_data_flags(p)
    _add_run_flags(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--stratified", action="store_true",
                   help="stratify folds by class (off by default)")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="predict drivers for new interactions")
    p.add_argument("--model", required=True, help="bundle directory from train")
    p.add_argument("--input", required=True, help="CSV of interactions")
    p.add_argument("--out", required=True, help="output prediction CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--profile", required=True,
                   help=f"profile file or built-in name ({', '.join(synth.BUILTIN_PROFILES)})")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)
    return parser


def _load_dataset(args):
    config = IngestConfig.from_file(args.ingest_config)
    ds = parse_csv(args.dataset, config)
    decomposed = False
    if not args.no_decompose and (ds.timestamp_name or ds.engine_runtime_name):
        ds = decompose_timestamp(ds)
        decomposed = True
    exclusion_text = None
    if args.exclude_sparse is not None:
        ds, report = exclude_sparse_drivers(ds, args.exclude_sparse)
        exclusion_text = report.to_text()
    return ds, config, decomposed, exclusion_text


def _run_digest(args, skip=("func", "command", "out", "jobs")) -> str:
    """Digest of the semantically meaningful run configuration.

    The output location and worker count are excluded: they must never
    change what gets computed.
    """
    payload = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def _parse_owner_task(task: str, allow_owner_all: bool = False):
    if task == "multi":
        return task
    if task == "owner-all":
        if not allow_owner_all:
            raise ConfigError("task owner-all is only valid for eval")
        return task
    if task.startswith("owner:") and len(task) > len("owner:"):
        return task
    raise ConfigError(f"task must be multi or owner:<driver id>, got {task!r}")


def cmd_rank(args) -> int:
    ds, _, _, exclusion = _load_dataset(args)
    task = _parse_owner_task(args.task)
    if task.startswith("owner:"):
        from .dataset import label_for_owner

        ds = label_for_owner(ds, task[len("owner:"):])
    ranking = rank_features(ds)
    subset = apply_selection(ranking, args.fs)
    text = ranking_report(ranking, subset)
    sys.stdout.write(text)
    if exclusion:
        sys.stdout.write(exclusion)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "ranking.txt").write_text(text, encoding="utf-8")
        (outdir / "ranking.csv").write_text(ranking_csv(ranking, subset),
                                            encoding="utf-8")
        if exclusion:
            (outdir / "exclusions.txt").write_text(exclusion, encoding="utf-8")
    return EXIT_OK


def _tree_params(args):
    return TreeParams() if args.learner == "c45" else None


def cmd_train(args) -> int:
    task = _parse_owner_task(args.task)
    ds, config, decomposed, exclusion = _load_dataset(args)
    kwargs = dict(fs_mode=args.fs, n_jobs=args.jobs,
                  n_features_per_node=args.features_per_node,
                  tree_params=_tree_params(args))
    if args.trees is not None:
        kwargs["n_trees"] = args.trees
    if task == "multi":
        model = pipeline.train_multi_driver(ds, args.learner, args.seed, **kwargs)
    else:
        model = pipeline.generate_model(ds, task[len("owner:"):], args.learner,
                                        args.seed, **kwargs)
    extra = {
        "ingest": dataclasses.asdict(config),
        "decomposed": decomposed,
        "dataset_digest": ds.digest,
        "run_config_digest": _run_digest(args),
    }
    outdir = pipeline.save_bundle(model, args.out, extra)
    if exclusion:
        (outdir / "exclusions.txt").write_text(exclusion, encoding="utf-8")
    sys.stdout.write(f"bundle written to {outdir}\n")
    return EXIT_OK


def cmd_eval(args) -> int:
    task = _parse_owner_task(args.task, allow_owner_all=True)
    ds, _, _, exclusion = _load_dataset(args)
    common = dict(learner=args.learner, k=args.folds, seed=args.seed,
                  fs_mode=args.fs, n_trees=args.trees,
                  n_features_per_node=args.features_per_node,
                  n_jobs=args.jobs, stratified=args.stratified,
                  tree_params=_tree_params(args))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    run_meta = {
        "seed": args.seed,
        "learner": args.learner,
        "task": task,
        "folds": args.folds,
        "fs": args.fs,
        "run_config_digest": _run_digest(args),
        "dataset_digest": ds.digest,
        "kernel_backend": BACKEND,
    }
    if task == "owner-all":
        report = evaluation.owner_experiment(ds, **common)
        (outdir / "report.txt").write_text(report.to_text(), encoding="utf-8")
        (outdir / "report.csv").write_text(report.to_csv(), encoding="utf-8")
        summary = (f"avg accuracy={report.avg_accuracy:.4f}"
                   f" avg precision={report.avg_precision:.4f}"
                   f" avg recall={report.avg_recall:.4f}"
                   f" perfect-precision owners={len(report.perfect_precision_owners)}\n")
    else:
        report = evaluation.cross_validate(ds, task, **common)
        (outdir / "report.txt").write_text(report.to_text(), encoding="utf-8")
        (outdir / "report.csv").write_text(report.fold_csv(), encoding="utf-8")
        (outdir / "per_class.csv").write_text(report.per_class_csv(), encoding="utf-8")
        summary = (f"accuracy={report.mean_accuracy:.4f}"
                   f" precision={report.mean_precision:.4f}"
                   f" recall={report.mean_recall:.4f}\n")
    (outdir / "run.json").write_text(
        json.dumps(run_meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    if exclusion:
        (outdir / "exclusions.txt").write_text(exclusion, encoding="utf-8")
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_predict(args) -> int:
    model, manifest = pipeline.load_bundle(args.model)
    ingest = manifest.get("ingest")
    if ingest is None:
        raise DataError(f"{args.model}: bundle manifest lacks ingestion settings")
    ingest = {k: tuple(v) if isinstance(v, list) else v for k, v in ingest.items()}
    config = IngestConfig(**ingest)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        ds = parse_csv(args.input, config, require_label=False)
    except EmptyDatasetError:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerow(["prediction", "confidence"])
        return EXIT_OK
    if manifest.get("decomposed"):
        ds = decompose_timestamp(ds)
    labels, confidences = pipeline.predict_labels(model.classifier, ds)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["prediction", "confidence"])
        for label, conf in zip(labels, confidences):
            writer.writerow([label, repr(float(conf))])
    sys.stdout.write(f"wrote {len(labels)} predictions to {out}\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    profile = synth.load_profile(args.profile)
    csv_path, cfg_path = synth.write_corpus(profile, args.rows, args.seed, args.out)
    sys.stdout.write(f"wrote {csv_path} and {cfg_path}\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA
    except DriverIdError as exc:
        sys.stderr.write(f"internal error: {exc}\n")
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - map any invariant break to exit 4
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
