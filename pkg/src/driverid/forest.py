"""Bagged ensembles of randomized, unpruned trees with majority voting.

Every tree trains on its own bootstrap sample and considers a fresh uniform
random subset of features at each node.  Per-tree RNG streams derive from
the master seed, so a forest is bit-identical for a given input regardless
of how many workers train it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .base import ConfigError, DataError, SchemaError
from .dataset import Dataset, Interaction
from .tree import (
    DecisionTree,
    TrainMatrix,
    TreeParams,
    _encode_instances,
    _train_on_matrix,
    predict_batch,
    tree_from_doc,
    tree_to_doc,
)

FOREST_FORMAT = "driverid-forest"
FOREST_FORMAT_VERSION = 1

DEFAULT_N_TREES = 100


@dataclass(frozen=True)
class Forest:
    trees: tuple
    per_tree_seed: tuple
    n_features_per_node: int
    classes: tuple
    priors: tuple
    master_seed: int
    bootstrap: bool = True

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, instance: Interaction):
        """Majority vote over the trees: ``(label, vote_share)``."""
        tree0 = self.trees[0]
        cols = _encode_instances(tree0.features, tree0.cat_values, [instance])
        codes, shares = predict_forest_batch(self, cols)
        return self.classes[int(codes[0])], float(shares[0])


def default_feature_count(n_predictors: int) -> int:
    return max(1, int(math.floor(math.sqrt(n_predictors))))


def _bootstrap_indices(n: int, rng) -> np.ndarray:
    return rng.integers(0, n, size=n, dtype=np.int64)


def bootstrap_sample(dataset: Dataset, seed: int) -> Dataset:
    """Uniform sample of ``len(dataset)`` rows with replacement."""
    if len(dataset) == 0:
        raise DataError("cannot bootstrap an empty dataset")
    rng = np.random.default_rng(seed)
    return dataset.subset(_bootstrap_indices(len(dataset), rng))


def _train_one(tm: TrainMatrix, params: TreeParams, seed: int,
               k_features: int, bootstrap: bool) -> DecisionTree:
    rng = np.random.default_rng(seed)
    idx = _bootstrap_indices(tm.n, rng) if bootstrap else None
    return _train_on_matrix(tm, params, rng=rng, k_features=k_features, idx=idx)


def train_forest(training: Dataset, n_trees: int = DEFAULT_N_TREES,
                 n_features_per_node: int | None = None, master_seed: int = 0,
                 bootstrap: bool = True, n_jobs: int = 1,
                 max_depth: int | None = None) -> Forest:
    """Train ``n_trees`` unpruned trees on bootstrap samples.

    ``n_features_per_node`` defaults to floor(sqrt(#predictors)).  Trees are
    grown with min_leaf_instances=1 and no pruning.  ``bootstrap=False`` is
    a test hook that trains every tree on the full dataset.
    """
    if n_trees < 1:
        raise ConfigError("n_trees must be >= 1")
    if not training.schema:
        raise SchemaError("training data has no predictor features")
    if len(training) == 0:
        raise DataError("training data is empty")
    n_feat = len(training.schema)
    if n_features_per_node is None:
        n_features_per_node = default_feature_count(n_feat)
    if not 1 <= n_features_per_node <= n_feat:
        raise ConfigError(
            f"n_features_per_node must be in [1, {n_feat}], got {n_features_per_node}")

    tm = TrainMatrix(training)
    params = TreeParams(min_leaf_instances=1, pruning_enabled=False, max_depth=max_depth)
    seeds = [int(s) for s in
             np.random.SeedSequence(master_seed).generate_state(n_trees, np.uint64)]
    if n_jobs == 1:
        trees = [_train_one(tm, params, s, n_features_per_node, bootstrap) for s in seeds]
    else:
        trees = Parallel(n_jobs=n_jobs)(
            delayed(_train_one)(tm, params, s, n_features_per_node, bootstrap)
            for s in seeds)

    counts = np.bincount(tm.y, minlength=len(tm.classes)).astype(np.float64)
    priors = counts / counts.sum()
    return Forest(tuple(trees), tuple(seeds), n_features_per_node,
                  tuple(tm.classes), tuple(float(p) for p in priors),
                  master_seed, bootstrap)


def predict_forest(forest: Forest, instance: Interaction):
    """Spec-level single-instance vote; see Forest.predict."""
    return forest.predict(instance)


def predict_forest_batch(forest: Forest, cols):
    """Vote over pre-encoded columns -> (class codes, vote shares).

    Ties break toward the class with the higher training prior, then
    first-seen class order.
    """
    n = cols[0].shape[0]
    k = len(forest.classes)
    votes = np.zeros((n, k), dtype=np.int64)
    rows = np.arange(n)
    for tree in forest.trees:
        codes, _ = predict_batch(tree, cols)
        votes[rows, codes] += 1
    # stable argmax under the tie-break ordering: sort classes once by
    # (prior desc, index asc) and take the first maximum in that order
    order = sorted(range(k), key=lambda c: (-forest.priors[c], c))
    reordered = votes[:, order]
    best = np.argmax(reordered, axis=1)
    codes = np.asarray(order, dtype=np.int64)[best]
    shares = votes[rows, codes] / forest.n_trees
    return codes, shares


# ---------------------------------------------------------------------------
# serialization


def forest_to_doc(forest: Forest) -> dict:
    return {
        "format": FOREST_FORMAT,
        "format_version": FOREST_FORMAT_VERSION,
        "master_seed": forest.master_seed,
        "per_tree_seed": list(forest.per_tree_seed),
        "n_features_per_node": forest.n_features_per_node,
        "bootstrap": forest.bootstrap,
        "classes": list(forest.classes),
        "priors": [float(p) for p in forest.priors],
        "trees": [tree_to_doc(t) for t in forest.trees],
    }


def forest_to_json(forest: Forest) -> str:
    return json.dumps(forest_to_doc(forest), sort_keys=True, separators=(",", ":"))


def forest_from_doc(doc: dict) -> Forest:
    if doc.get("format") != FOREST_FORMAT:
        raise DataError(f"not a {FOREST_FORMAT} document")
    if doc.get("format_version") != FOREST_FORMAT_VERSION:
        raise DataError(f"unsupported forest format version {doc.get('format_version')!r}")
    return Forest(
        trees=tuple(tree_from_doc(t) for t in doc["trees"]),
        per_tree_seed=tuple(doc["per_tree_seed"]),
        n_features_per_node=doc["n_features_per_node"],
        classes=tuple(doc["classes"]),
        priors=tuple(doc["priors"]),
        master_seed=doc["master_seed"],
        bootstrap=doc.get("bootstrap", True),
    )


def forest_from_json(text: str) -> Forest:
    return forest_from_doc(json.loads(text))
