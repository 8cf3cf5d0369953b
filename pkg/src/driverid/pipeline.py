"""End-to-end model generation and identification.

Owner models label the data 1 for the owner and 0 for everyone else, run
feature selection on the labeled data (so different owners may keep
different features), and train the chosen learner on the kept features.
Multi-driver models do the same once over the raw driver labels.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from . import selection
from .base import ConfigError, DataError
from .dataset import Dataset, Interaction, label_for_owner
from .forest import (
    DEFAULT_N_TREES,
    Forest,
    forest_from_json,
    forest_to_json,
    predict_forest_batch,
    train_forest,
)
from .tree import (
    DecisionTree,
    TreeParams,
    encode_dataset,
    predict_batch,
    train_c45,
    tree_from_json,
    tree_to_json,
)

LEARNERS = ("c45", "rf")

BUNDLE_FORMAT = "driverid-bundle"
BUNDLE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class OwnerModel:
    owner_id: str
    ranking: selection.FeatureRanking
    selection: selection.SelectedSubset
    classifier: object
    learner: str
    seed: int
    fingerprint: str


@dataclass(frozen=True)
class MultiDriverModel:
    ranking: selection.FeatureRanking
    selection: selection.SelectedSubset
    classifier: object
    classes: tuple
    learner: str
    seed: int
    fingerprint: str


def _check_learner(learner: str):
    if learner not in LEARNERS:
        raise ConfigError(f"learner must be one of {LEARNERS}, got {learner!r}")


def _fingerprint(dataset: Dataset, tag: str, learner: str, seed: int) -> str:
    text = f"{dataset.digest}:{tag}:{learner}:{seed}"
    return hashlib.sha256(text.encode()).hexdigest()


def _train_classifier(projected: Dataset, learner: str, seed: int,
                      tree_params: TreeParams | None, n_trees: int,
                      n_features_per_node: int | None, n_jobs: int):
    if learner == "c45":
        return train_c45(projected, tree_params)
    return train_forest(projected, n_trees=n_trees,
                        n_features_per_node=n_features_per_node,
                        master_seed=seed, n_jobs=n_jobs)


def generate_model(dataset: Dataset, owner: str, learner: str = "rf", seed: int = 0,
                   fs_mode: str = "paradigm", tree_params: TreeParams | None = None,
                   n_trees: int = DEFAULT_N_TREES, n_features_per_node: int | None = None,
                   n_jobs: int = 1) -> OwnerModel:
    """Train an owner-identification model (binary 1=owner / 0=other)."""
    _check_learner(learner)
    binary = label_for_owner(dataset, owner)
    if len(binary.class_values) < 2:
        raise DataError(f"owner {owner!r} covers every row; need at least 2 classes")
    ranking = selection.rank_features(binary)
    subset = selection.apply_selection(ranking, fs_mode)
    if not subset.kept:
        raise DataError("no features survived selection; cannot train")
    projected = binary.project(subset.kept)
    classifier = _train_classifier(projected, learner, seed, tree_params,
                                   n_trees, n_features_per_node, n_jobs)
    return OwnerModel(owner, ranking, subset, classifier, learner, seed,
                      _fingerprint(dataset, f"owner:{owner}", learner, seed))


def identify(model: OwnerModel, interaction: Interaction):
    """Does the interaction belong to the owner?  ``(is_owner, confidence)``.

    The interaction must align with the model's kept-feature schema
    (project the dataset to ``model.selection.kept`` first).
    """
    label, confidence = _predict_one(model.classifier, interaction)
    return label == "1", confidence


def train_multi_driver(dataset: Dataset, learner: str = "rf", seed: int = 0,
                       fs_mode: str = "paradigm", tree_params: TreeParams | None = None,
                       n_trees: int = DEFAULT_N_TREES, n_features_per_node: int | None = None,
                       n_jobs: int = 1) -> MultiDriverModel:
    """Train one multiclass model over all retained drivers."""
    _check_learner(learner)
    if len(dataset.class_values) < 2:
        raise DataError("multi-driver training needs at least 2 drivers")
    ranking = selection.rank_features(dataset)
    subset = selection.apply_selection(ranking, fs_mode)
    if not subset.kept:
        raise DataError("no features survived selection; cannot train")
    projected = dataset.project(subset.kept)
    classifier = _train_classifier(projected, learner, seed, tree_params,
                                   n_trees, n_features_per_node, n_jobs)
    return MultiDriverModel(ranking, subset, classifier, dataset.class_values,
                            learner, seed, _fingerprint(dataset, "multi", learner, seed))


def predict_driver(model: MultiDriverModel, interaction: Interaction):
    """Predicted driver id and confidence for one interaction."""
    return _predict_one(model.classifier, interaction)


def _predict_one(classifier, interaction: Interaction):
    return classifier.predict(interaction)


def classifier_features(classifier):
    if isinstance(classifier, Forest):
        return classifier.trees[0].features, classifier.trees[0].cat_values
    return classifier.features, classifier.cat_values


def predict_labels(classifier, dataset: Dataset):
    """Batch prediction against any dataset containing the kept features.

    Returns ``(labels, confidences)`` with labels as class strings.
    """
    features, cat_values = classifier_features(classifier)
    cols = encode_dataset(features, cat_values, dataset)
    if isinstance(classifier, Forest):
        codes, conf = predict_forest_batch(classifier, cols)
        classes = classifier.classes
    else:
        codes, conf = predict_batch(classifier, cols)
        classes = classifier.classes
    return [classes[int(c)] for c in codes], conf


# ---------------------------------------------------------------------------
# model bundles


def save_bundle(model, outdir, extra_manifest: dict | None = None) -> Path:
    """Persist a trained model as a directory bundle.

    Layout: ``manifest.json`` (metadata, selection, ranking),
    ``model.json`` (classifier document), ``selection.txt`` and
    ``selection.csv`` (the ranking report).  Re-saving an identically
    trained model produces byte-identical files.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if isinstance(model, OwnerModel):
        task = {"task": "owner", "owner_id": model.owner_id}
    elif isinstance(model, MultiDriverModel):
        task = {"task": "multi", "classes": list(model.classes)}
    else:
        raise ConfigError(f"cannot bundle object of type {type(model).__name__}")

    classifier = model.classifier
    if isinstance(classifier, Forest):
        model_json = forest_to_json(classifier)
        hyper = {
            "n_trees": classifier.n_trees,
            "n_features_per_node": classifier.n_features_per_node,
            "bootstrap": classifier.bootstrap,
        }
    else:
        model_json = tree_to_json(classifier)
        hyper = {
            "min_leaf_instances": classifier.params.min_leaf_instances,
            "confidence_factor": classifier.params.confidence_factor,
            "pruning_enabled": classifier.params.pruning_enabled,
            "max_depth": classifier.params.max_depth,
        }

    manifest = {
        "format": BUNDLE_FORMAT,
        "format_version": BUNDLE_FORMAT_VERSION,
        **task,
        "learner": model.learner,
        "seed": model.seed,
        "fingerprint": model.fingerprint,
        "hyperparameters": hyper,
        "selection": {
            "kept": list(model.selection.kept),
            "discarded_zero": list(model.selection.discarded_zero),
            "discarded_below_average": list(model.selection.discarded_below_average),
            "average_rank": model.selection.average_rank,
            "note": model.selection.note,
        },
        "ranking": [
            [e.feature, e.index, e.rank, e.timestamp_correlated]
            for e in model.ranking.entries
        ],
        "model_digest": hashlib.sha256(model_json.encode()).hexdigest(),
    }
    if extra_manifest:
        manifest.update(extra_manifest)

    (outdir / "model.json").write_text(model_json, encoding="utf-8")
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    (outdir / "selection.txt").write_text(
        selection.ranking_report(model.ranking, model.selection), encoding="utf-8")
    (outdir / "selection.csv").write_text(
        selection.ranking_csv(model.ranking, model.selection), encoding="utf-8")
    return outdir


def load_bundle(path):
    """Load a bundle directory back into an OwnerModel or MultiDriverModel.

    Returns ``(model, manifest)``.
    """
    path = Path(path)
    manifest_file = path / "manifest.json"
    if not manifest_file.exists():
        raise FileNotFoundError(f"no manifest.json in {path}")
    manifest = json.loads(manifest_file.read_text(encoding="utf-8"))
    if manifest.get("format") != BUNDLE_FORMAT:
        raise DataError(f"{path} is not a {BUNDLE_FORMAT} directory")
    if manifest.get("format_version") != BUNDLE_FORMAT_VERSION:
        raise DataError(f"unsupported bundle version {manifest.get('format_version')!r}")

    model_json = (path / "model.json").read_text(encoding="utf-8")
    digest = hashlib.sha256(model_json.encode()).hexdigest()
    if digest != manifest.get("model_digest"):
        raise DataError(f"{path}: model.json does not match its manifest digest")
    doc = json.loads(model_json)
    if doc.get("format") == "driverid-forest":
        classifier = forest_from_json(model_json)
    else:
        classifier = tree_from_json(model_json)

    entries = tuple(
        selection.RankEntry(name, int(index), float(rank), bool(ts))
        for name, index, rank, ts in manifest["ranking"])
    ranking = selection.FeatureRanking(entries)
    sel = manifest["selection"]
    subset = selection.SelectedSubset(
        kept=tuple(sel["kept"]),
        discarded_zero=tuple(sel["discarded_zero"]),
        discarded_below_average=tuple(sel["discarded_below_average"]),
        average_rank=float(sel["average_rank"]),
        note=sel.get("note"),
    )
    if manifest["task"] == "owner":
        model = OwnerModel(manifest["owner_id"], ranking, subset, classifier,
                           manifest["learner"], manifest["seed"], manifest["fingerprint"])
    else:
        model = MultiDriverModel(ranking, subset, classifier,
                                 tuple(manifest["classes"]), manifest["learner"],
                                 manifest["seed"], manifest["fingerprint"])
    return model, manifest
