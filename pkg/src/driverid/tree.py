"""C4.5-style decision trees: induction, pessimistic pruning, prediction,
and a versioned JSON serialization.

Induction recursively picks the test with the highest defined gain ratio.
Numeric features use the best binary threshold; categorical features split
one branch per observed value.  Rows with a missing tested value are routed
fractionally down every branch, weighted by the branch shares observed in
training, both while growing and while predicting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .base import MISSING, ConfigError, DataError, FeatureKind, SchemaError
from .dataset import Dataset, FeatureDescriptor, Interaction
from .infotheory import best_split_arrays, categorical_gain_arrays

TREE_FORMAT = "driverid-tree"
TREE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TreeParams:
    min_leaf_instances: int = 2
    confidence_factor: float = 0.25
    pruning_enabled: bool = True
    max_depth: int | None = None

    def __post_init__(self):
        if self.min_leaf_instances < 1:
            raise ConfigError("min_leaf_instances must be >= 1")
        if not 0.0 < self.confidence_factor < 1.0:
            raise ConfigError("confidence_factor must be in (0, 1)")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")


class Leaf:
    __slots__ = ("distribution", "prediction", "share")

    def __init__(self, distribution: np.ndarray):
        self.distribution = distribution
        self.prediction = int(np.argmax(distribution))
        self.share = distribution / distribution.sum()

    @property
    def is_leaf(self) -> bool:
        return True


class Split:
    __slots__ = ("feature", "threshold", "branch_codes", "children", "shares",
                 "distribution", "_child_of_code")

    def __init__(self, feature: int, threshold: float | None, branch_codes,
                 children: list, shares: np.ndarray, distribution: np.ndarray):
        self.feature = feature
        self.threshold = threshold
        self.branch_codes = branch_codes
        self.children = children
        self.shares = shares
        self.distribution = distribution
        self._child_of_code = (
            None if branch_codes is None
            else {c: i for i, c in enumerate(branch_codes)})

    @property
    def is_leaf(self) -> bool:
        return False


@dataclass(frozen=True)
class DecisionTree:
    root: object
    classes: tuple
    features: tuple
    cat_values: dict
    params: TreeParams

    def predict(self, instance: Interaction):
        """Route one interaction to a prediction: ``(label, confidence)``."""
        cols = _encode_instances(self.features, self.cat_values, [instance])
        codes, conf = predict_batch(self, cols)
        return self.classes[int(codes[0])], float(conf[0])

    def node_count(self) -> int:
        return _count_nodes(self.root)

    def leaf_count(self) -> int:
        return _count_leaves(self.root)

    def depth(self) -> int:
        return _depth(self.root)


# ---------------------------------------------------------------------------
# training matrix


class TrainMatrix:
    """Columnar, code-encoded view of a dataset used by the learners."""

    __slots__ = ("cols", "kinds", "cat_values", "y", "classes", "n", "features")

    def __init__(self, dataset: Dataset):
        self.n = len(dataset)
        self.features = dataset.schema
        self.kinds = [f.kind for f in dataset.schema]
        self.classes = list(dataset.class_values)
        class_code = {c: i for i, c in enumerate(self.classes)}
        self.y = np.fromiter((class_code[i.driver_id] for i in dataset.instances),
                             dtype=np.int32, count=self.n)
        self.cols = []
        self.cat_values = {}
        for f in dataset.schema:
            if f.kind is FeatureKind.NUMERIC:
                col = np.empty(self.n, dtype=np.float64)
                for r, inst in enumerate(dataset.instances):
                    v = inst.values[f.index]
                    col[r] = np.nan if v is MISSING else v
            else:
                tokens: dict = {}
                col = np.empty(self.n, dtype=np.int32)
                for r, inst in enumerate(dataset.instances):
                    v = inst.values[f.index]
                    if v is MISSING:
                        col[r] = -1
                    else:
                        if v not in tokens:
                            tokens[v] = len(tokens)
                        col[r] = tokens[v]
                self.cat_values[f.index] = tuple(tokens)
            self.cols.append(col)


def _encode_instances(features: Sequence[FeatureDescriptor], cat_values: dict,
                      instances: Sequence[Interaction]):
    """Encode interactions against a trained schema (unseen tokens -> missing)."""
    n = len(instances)
    for inst in instances:
        if len(inst.values) != len(features):
            raise SchemaError(
                f"instance has {len(inst.values)} values,"
                f" model expects {len(features)}")
    cols = []
    for f in features:
        if f.kind is FeatureKind.NUMERIC:
            col = np.empty(n, dtype=np.float64)
            for r, inst in enumerate(instances):
                v = inst.values[f.index]
                col[r] = np.nan if v is MISSING else v
        else:
            code = {t: i for i, t in enumerate(cat_values.get(f.index, ()))}
            col = np.empty(n, dtype=np.int32)
            for r, inst in enumerate(instances):
                v = inst.values[f.index]
                col[r] = code.get(v, -1) if v is not MISSING else -1
        cols.append(col)
    return cols


def encode_dataset(tree_features, cat_values, dataset: Dataset):
    """Align a dataset to a trained schema by feature name.

    Raises SchemaError naming every feature the dataset lacks.
    """
    have = {f.name: f for f in dataset.schema}
    lacking = [f.name for f in tree_features if f.name not in have]
    if lacking:
        raise SchemaError(f"input is missing model features: {lacking}")
    remapped = []
    for pos, f in enumerate(tree_features):
        src = have[f.name]
        if src.kind is not f.kind:
            raise SchemaError(f"feature {f.name!r} kind mismatch:"
                              f" model {f.kind.value}, input {src.kind.value}")
        remapped.append((f, src.index))
    n = len(dataset)
    cols = []
    for f, src_idx in remapped:
        if f.kind is FeatureKind.NUMERIC:
            col = np.empty(n, dtype=np.float64)
            for r, inst in enumerate(dataset.instances):
                v = inst.values[src_idx]
                col[r] = np.nan if v is MISSING else v
        else:
            code = {t: i for i, t in enumerate(cat_values.get(f.index, ()))}
            col = np.empty(n, dtype=np.int32)
            for r, inst in enumerate(dataset.instances):
                v = inst.values[src_idx]
                col[r] = code.get(v, -1) if v is not MISSING else -1
        cols.append(col)
    return cols


# ---------------------------------------------------------------------------
# induction


def train_c45(training: Dataset, params: TreeParams | None = None) -> DecisionTree:
    """Grow (and by default prune) a C4.5-style tree on the dataset."""
    params = params or TreeParams()
    if not training.schema:
        raise SchemaError("training data has no predictor features")
    if len(training) == 0:
        raise DataError("training data is empty")
    tm = TrainMatrix(training)
    tree = _train_on_matrix(tm, params, rng=None, k_features=None)
    if params.pruning_enabled:
        tree = prune(tree, params)
    return tree


def _train_on_matrix(tm: TrainMatrix, params: TreeParams, rng, k_features,
                     idx=None, weights=None) -> DecisionTree:
    if idx is None:
        idx = np.arange(tm.n, dtype=np.int64)
    if weights is None:
        weights = np.ones(idx.shape[0], dtype=np.float64)
    root = _grow(tm, idx, weights, params, rng, k_features, len(tm.classes), 0)
    return DecisionTree(root, tuple(tm.classes), tuple(tm.features),
                        dict(tm.cat_values), params)


def _grow(tm, idx, w, params, rng, k_features, n_classes, depth):
    y_node = tm.y[idx]
    dist = np.bincount(y_node, weights=w, minlength=n_classes)
    total_w = float(dist.sum())
    if (np.all(y_node == y_node[0])
            or total_w < 2 * params.min_leaf_instances
            or (params.max_depth is not None and depth >= params.max_depth)):
        return Leaf(dist)

    n_feat = len(tm.cols)
    if k_features is not None and k_features < n_feat:
        candidates = np.sort(rng.choice(n_feat, size=k_features, replace=False))
    else:
        candidates = range(n_feat)

    min_bw = float(params.min_leaf_instances)
    best_ratio = -1.0
    best = None
    for f in candidates:
        col = tm.cols[f][idx]
        if tm.kinds[f] is FeatureKind.NUMERIC:
            res = best_split_arrays(col, y_node, w, n_classes, min_branch_weight=min_bw)
            if res is not None and res[2] > best_ratio:
                best_ratio = res[2]
                best = (int(f), res[0], None)
        else:
            res = categorical_gain_arrays(col, y_node, w, n_classes,
                                          len(tm.cat_values[f]), min_branch_weight=min_bw)
            if res is not None and res[1] > best_ratio:
                best_ratio = res[1]
                best = (int(f), None, res[2])
    if best is None:
        return Leaf(dist)

    f, threshold, counts = best
    col = tm.cols[f][idx]
    if threshold is not None:
        with np.errstate(invalid="ignore"):
            left = col <= threshold
            right = col > threshold
        branch_masks = [left, right]
        missing = np.isnan(col)
        branch_codes = None
    else:
        group_w = counts.sum(axis=1)
        codes = [int(c) for c in np.nonzero(group_w > 0.0)[0]]
        branch_masks = [col == c for c in codes]
        missing = col < 0
        branch_codes = tuple(codes)

    branch_w = np.array([float(w[m].sum()) for m in branch_masks])
    known_w = float(branch_w.sum())
    shares = branch_w / known_w
    has_missing = bool(missing.any())
    children = []
    for b, mask in enumerate(branch_masks):
        child_idx = idx[mask]
        child_w = w[mask]
        if has_missing:
            child_idx = np.concatenate([child_idx, idx[missing]])
            child_w = np.concatenate([child_w, w[missing] * shares[b]])
        children.append(_grow(tm, child_idx, child_w, params, rng, k_features,
                              n_classes, depth + 1))
    return Split(f, threshold, branch_codes, children, shares, dist)


# ---------------------------------------------------------------------------
# prediction


def predict_batch(tree: DecisionTree, cols):
    """Predict class codes and confidences for pre-encoded columns."""
    n = cols[0].shape[0] if cols else 0
    k = len(tree.classes)
    out = np.zeros((n, k), dtype=np.float64)
    idx = np.arange(n, dtype=np.int64)
    _route(tree.root, cols, idx, np.ones(n, dtype=np.float64), out)
    codes = np.argmax(out, axis=1)
    conf = out[np.arange(n), codes]
    return codes, conf


def _route(node, cols, idx, weight, out):
    if idx.shape[0] == 0:
        return
    if node.is_leaf:
        out[idx] += weight[:, None] * node.share[None, :]
        return
    col = cols[node.feature][idx]
    if node.threshold is not None:
        with np.errstate(invalid="ignore"):
            masks = [col <= node.threshold, col > node.threshold]
        missing = np.isnan(col)
    else:
        masks = [col == c for c in node.branch_codes]
        missing = col < 0
        known = np.zeros(idx.shape[0], dtype=bool)
        for m in masks:
            known |= m
        missing |= ~known  # unseen category tokens route like missing
    for b, mask in enumerate(masks):
        _route(node.children[b], cols, idx[mask], weight[mask], out)
    if missing.any():
        for b in range(len(masks)):
            _route(node.children[b], cols, idx[missing],
                   weight[missing] * node.shares[b], out)


def predict_tree(tree: DecisionTree, instance: Interaction):
    """Spec-level single-instance prediction; see DecisionTree.predict."""
    return tree.predict(instance)


# ---------------------------------------------------------------------------
# pruning


def _added_errors(n: float, e: float, cf: float) -> float:
    """Pessimistic additional errors for a node covering weight n with e errors."""
    if n <= 0.0:
        return 0.0
    if e < 1e-12:
        return n * (1.0 - cf ** (1.0 / n))
    if e < 1.0:
        base = n * (1.0 - cf ** (1.0 / n))
        return base + e * (_added_errors(n, 1.0, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1.0 - cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n)
         + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return max(r * n - e, 0.0)


def prune(tree: DecisionTree, params: TreeParams | None = None) -> DecisionTree:
    """Bottom-up subtree replacement by pessimistic error estimates.

    A subtree collapses to a leaf when the leaf's estimated errors do not
    exceed the subtree's (plus a small slack).  Never increases node count.
    """
    params = params or tree.params
    cf = params.confidence_factor

    def rec(node):
        if node.is_leaf:
            n = float(node.distribution.sum())
            e = n - float(node.distribution.max())
            return node, e + _added_errors(n, e, cf)
        pruned = []
        subtree_est = 0.0
        for child in node.children:
            c, est = rec(child)
            pruned.append(c)
            subtree_est += est
        n = float(node.distribution.sum())
        e = n - float(node.distribution.max())
        leaf_est = e + _added_errors(n, e, cf)
        if leaf_est <= subtree_est + 0.1:
            leaf = Leaf(node.distribution.copy())
            return leaf, leaf_est
        return (Split(node.feature, node.threshold, node.branch_codes, pruned,
                      node.shares, node.distribution), subtree_est)

    root, _ = rec(tree.root)
    return DecisionTree(root, tree.classes, tree.features, tree.cat_values, params)


# ---------------------------------------------------------------------------
# serialization


def _count_nodes(node) -> int:
    if node.is_leaf:
        return 1
    return 1 + sum(_count_nodes(c) for c in node.children)


def _count_leaves(node) -> int:
    if node.is_leaf:
        return 1
    return sum(_count_leaves(c) for c in node.children)


def _depth(node) -> int:
    if node.is_leaf:
        return 0
    return 1 + max(_depth(c) for c in node.children)


def _node_doc(node, tree: DecisionTree) -> dict:
    if node.is_leaf:
        return {
            "type": "leaf",
            "distribution": [float(x) for x in node.distribution],
            "prediction": tree.classes[node.prediction],
        }
    feat = tree.features[node.feature]
    doc = {
        "type": "numeric" if node.threshold is not None else "categorical",
        "feature": feat.name,
        "branch_shares": [float(s) for s in node.shares],
        "children": [_node_doc(c, tree) for c in node.children],
    }
    if node.threshold is not None:
        doc["threshold"] = float(node.threshold)
    else:
        values = tree.cat_values[node.feature]
        doc["values"] = [values[c] for c in node.branch_codes]
    return doc


def tree_to_doc(tree: DecisionTree) -> dict:
    return {
        "format": TREE_FORMAT,
        "format_version": TREE_FORMAT_VERSION,
        "classes": list(tree.classes),
        "features": [
            {
                "name": f.name,
                "kind": f.kind.value,
                "timestamp_correlated": f.timestamp_correlated,
                "values": list(tree.cat_values.get(f.index, ())) or None,
            }
            for f in tree.features
        ],
        "params": {
            "min_leaf_instances": tree.params.min_leaf_instances,
            "confidence_factor": tree.params.confidence_factor,
            "pruning_enabled": tree.params.pruning_enabled,
            "max_depth": tree.params.max_depth,
        },
        "root": _node_doc(tree.root, tree),
    }


def tree_to_json(tree: DecisionTree) -> str:
    return json.dumps(tree_to_doc(tree), sort_keys=True, separators=(",", ":"))


def tree_from_doc(doc: dict) -> DecisionTree:
    if doc.get("format") != TREE_FORMAT:
        raise DataError(f"not a {TREE_FORMAT} document")
    if doc.get("format_version") != TREE_FORMAT_VERSION:
        raise DataError(f"unsupported tree format version {doc.get('format_version')!r}")
    classes = tuple(doc["classes"])
    features = []
    cat_values = {}
    for i, f in enumerate(doc["features"]):
        kind = FeatureKind(f["kind"])
        features.append(FeatureDescriptor(f["name"], kind,
                                          bool(f.get("timestamp_correlated")), i))
        if kind is FeatureKind.CATEGORICAL:
            cat_values[i] = tuple(f.get("values") or ())
    feat_index = {f.name: f.index for f in features}
    class_index = {c: i for i, c in enumerate(classes)}

    def node(d):
        if d["type"] == "leaf":
            leaf = Leaf(np.asarray(d["distribution"], dtype=np.float64))
            leaf.prediction = class_index[d["prediction"]]
            return leaf
        fi = feat_index[d["feature"]]
        children = [node(c) for c in d["children"]]
        shares = np.asarray(d["branch_shares"], dtype=np.float64)
        if d["type"] == "numeric":
            return Split(fi, float(d["threshold"]), None, children, shares,
                         np.zeros(len(classes)))
        token_code = {t: c for c, t in enumerate(cat_values[fi])}
        codes = tuple(token_code[t] for t in d["values"])
        return Split(fi, None, codes, children, shares, np.zeros(len(classes)))

    p = doc.get("params", {})
    params = TreeParams(
        min_leaf_instances=p.get("min_leaf_instances", 2),
        confidence_factor=p.get("confidence_factor", 0.25),
        pruning_enabled=p.get("pruning_enabled", True),
        max_depth=p.get("max_depth"),
    )
    return DecisionTree(node(doc["root"]), classes, tuple(features), cat_values, params)


def tree_from_json(text: str) -> DecisionTree:
    return tree_from_doc(json.loads(text))
