"""Confusion bookkeeping, Accuracy/Precision/Recall, k-fold cross-validation,
and the per-owner experiment.

Feature selection runs inside each training fold; test rows are never seen
by ranking or selection.  A precision or recall with a zero denominator
reports 0.0 and raises an undefined flag; fold aggregates skip flagged
folds and say so in the report.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import pipeline
from .base import ConfigError, DataError
from .dataset import Dataset, split_folds
from .tree import TreeParams


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def precision_defined(self) -> bool:
        return self.tp + self.fp > 0

    @property
    def recall_defined(self) -> bool:
        return self.tp + self.fn > 0


def accuracy(c: ConfusionCounts) -> float:
    """Correct predictions over all predictions."""
    if c.total == 0:
        raise DataError("accuracy of zero evaluated instances is undefined")
    return (c.tp + c.tn) / c.total


def precision(c: ConfusionCounts) -> float:
    """TP over predicted-positive; 0.0 when no positive was predicted."""
    if not c.precision_defined:
        return 0.0
    return c.tp / (c.tp + c.fp)


def recall(c: ConfusionCounts) -> float:
    """TP over actual-positive; 0.0 when no positive instance exists."""
    if not c.recall_defined:
        return 0.0
    return c.tp / (c.tp + c.fn)


class ConfusionMatrix:
    """Multiclass confusion counts with one-vs-rest views."""

    def __init__(self, classes, matrix=None):
        self.classes = tuple(classes)
        k = len(self.classes)
        self.m = np.zeros((k, k), dtype=np.int64) if matrix is None else matrix

    @classmethod
    def from_pairs(cls, classes, true_labels, predicted_labels):
        cm = cls(classes)
        index = {c: i for i, c in enumerate(cm.classes)}
        for t, p in zip(true_labels, predicted_labels):
            cm.m[index[t], index[p]] += 1
        return cm

    @property
    def total(self) -> int:
        return int(self.m.sum())

    def accuracy(self) -> float:
        if self.total == 0:
            raise DataError("accuracy of zero evaluated instances is undefined")
        return float(np.trace(self.m)) / self.total

    def support(self, label) -> int:
        return int(self.m[self.classes.index(label)].sum())

    def one_vs_rest(self, label) -> ConfusionCounts:
        i = self.classes.index(label)
        tp = int(self.m[i, i])
        fn = int(self.m[i].sum()) - tp
        fp = int(self.m[:, i].sum()) - tp
        tn = self.total - tp - fn - fp
        return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


@dataclass(frozen=True)
class ClassMetrics:
    label: str
    support: int
    counts: ConfusionCounts
    precision: float
    recall: float
    precision_defined: bool
    recall_defined: bool


@dataclass(frozen=True)
class FoldResult:
    fold: int
    n_test: int
    accuracy: float
    precision: float
    recall: float
    precision_defined: bool
    recall_defined: bool
    kept_features: tuple
    per_class: tuple = ()
    macro_precision: float | None = None
    macro_recall: float | None = None


@dataclass(frozen=True)
class EvaluationReport:
    task: str
    learner: str
    k: int
    seed: int
    fs_mode: str
    folds: tuple

    def _mean(self, attr: str, flag: str | None = None):
        vals = [getattr(f, attr) for f in self.folds
                if flag is None or getattr(f, flag)]
        skipped = len(self.folds) - len(vals)
        return (sum(vals) / len(vals) if vals else 0.0), skipped

    @property
    def mean_accuracy(self) -> float:
        return self._mean("accuracy")[0]

    @property
    def mean_precision(self) -> float:
        return self._mean("precision", "precision_defined")[0]

    @property
    def mean_recall(self) -> float:
        return self._mean("recall", "recall_defined")[0]

    def to_text(self) -> str:
        lines = [
            f"task: {self.task}   learner: {self.learner}   folds: {self.k}"
            f"   seed: {self.seed}   feature-selection: {self.fs_mode}",
            f"{'fold':>4}  {'n':>6}  {'accuracy':>9}  {'precision':>9}  {'recall':>9}"
            "  kept",
        ]
        for f in self.folds:
            pflag = "" if f.precision_defined else "*"
            rflag = "" if f.recall_defined else "*"
            lines.append(
                f"{f.fold:>4}  {f.n_test:>6}  {f.accuracy:>9.4f}"
                f"  {f.precision:>8.4f}{pflag:1}  {f.recall:>8.4f}{rflag:1}"
                f"  {len(f.kept_features)}")
        p, p_skipped = self._mean("precision", "precision_defined")
        r, r_skipped = self._mean("recall", "recall_defined")
        lines.append(f"mean  accuracy={self.mean_accuracy:.4f}"
                     f"  precision={p:.4f}  recall={r:.4f}")
        if p_skipped or r_skipped:
            lines.append(f"note: skipped {p_skipped} undefined-precision and"
                         f" {r_skipped} undefined-recall fold(s) in the means"
                         " (marked *)")
        return "\n".join(lines) + "\n"

    def fold_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fold", "n_test", "accuracy", "precision", "recall",
                    "precision_defined", "recall_defined", "kept_features"])
        for f in self.folds:
            w.writerow([f.fold, f.n_test, repr(f.accuracy), repr(f.precision),
                        repr(f.recall), int(f.precision_defined),
                        int(f.recall_defined), "|".join(f.kept_features)])
        p, _ = self._mean("precision", "precision_defined")
        r, _ = self._mean("recall", "recall_defined")
        w.writerow(["mean", sum(f.n_test for f in self.folds),
                    repr(self.mean_accuracy), repr(p), repr(r), "", "", ""])
        return buf.getvalue()

    def per_class_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fold", "class", "support", "tp", "fp", "fn", "tn",
                    "precision", "recall", "precision_defined", "recall_defined"])
        for f in self.folds:
            for cm in f.per_class:
                c = cm.counts
                w.writerow([f.fold, cm.label, cm.support, c.tp, c.fp, c.fn, c.tn,
                            repr(cm.precision), repr(cm.recall),
                            int(cm.precision_defined), int(cm.recall_defined)])
        return buf.getvalue()


def _parse_task(task: str):
    if task == "multi":
        return "multi", None
    if task.startswith("owner:") and len(task) > len("owner:"):
        return "owner", task[len("owner:"):]
    raise ConfigError(f"task must be 'multi' or 'owner:<driver>', got {task!r}")


def cross_validate(dataset: Dataset, task: str, learner: str = "rf", k: int = 10,
                   seed: int = 0, fs_mode: str = "paradigm",
                   tree_params: TreeParams | None = None, n_trees: int | None = None,
                   n_features_per_node: int | None = None, n_jobs: int = 1,
                   stratified: bool = False) -> EvaluationReport:
    """k-fold cross-validation of the full training pipeline.

    Training (including feature ranking and selection) happens inside each
    fold on the training split only.
    """
    kind, owner = _parse_task(task)
    if kind == "owner" and owner not in dataset.class_counts:
        raise DataError(f"unknown driver id {owner!r}")
    kwargs = dict(fs_mode=fs_mode, tree_params=tree_params, n_jobs=n_jobs,
                  n_features_per_node=n_features_per_node)
    if n_trees is not None:
        kwargs["n_trees"] = n_trees

    folds = []
    for i, (train_ds, test_ds) in enumerate(split_folds(dataset, k, seed, stratified)):
        if kind == "owner":
            model = pipeline.generate_model(train_ds, owner, learner, seed, **kwargs)
            predicted, _ = pipeline.predict_labels(model.classifier, test_ds)
            truth = ["1" if inst.driver_id == owner else "0"
                     for inst in test_ds.instances]
            cm = ConfusionMatrix.from_pairs(("0", "1"), truth, predicted)
            counts = cm.one_vs_rest("1")
            folds.append(FoldResult(
                fold=i + 1, n_test=len(test_ds), accuracy=accuracy(counts),
                precision=precision(counts), recall=recall(counts),
                precision_defined=counts.precision_defined,
                recall_defined=counts.recall_defined,
                kept_features=model.selection.kept,
                per_class=(_class_metrics("1", cm), _class_metrics("0", cm)),
            ))
        else:
            model = pipeline.train_multi_driver(train_ds, learner, seed, **kwargs)
            predicted, _ = pipeline.predict_labels(model.classifier, test_ds)
            truth = [inst.driver_id for inst in test_ds.instances]
            classes = list(model.classes)
            for label in truth:
                if label not in classes:
                    classes.append(label)
            cm = ConfusionMatrix.from_pairs(classes, truth, predicted)
            folds.append(_multiclass_fold(i + 1, cm, model.selection.kept))
    return EvaluationReport(task, learner, k, seed, fs_mode, tuple(folds))


def _class_metrics(label, cm: ConfusionMatrix) -> ClassMetrics:
    c = cm.one_vs_rest(label)
    return ClassMetrics(label, cm.support(label), c, precision(c), recall(c),
                        c.precision_defined, c.recall_defined)


def _multiclass_fold(fold: int, cm: ConfusionMatrix, kept) -> FoldResult:
    total = cm.total
    per_class = []
    weighted_p = 0.0
    weighted_r = 0.0
    macro_p = []
    macro_r = []
    all_defined = True
    for label in cm.classes:
        m = _class_metrics(label, cm)
        per_class.append(m)
        share = m.support / total
        if m.support > 0:
            weighted_p += share * m.precision
            weighted_r += share * m.recall
            macro_p.append(m.precision)
            macro_r.append(m.recall)
            if not m.precision_defined:
                all_defined = False
    return FoldResult(
        fold=fold, n_test=total, accuracy=cm.accuracy(),
        precision=weighted_p, recall=weighted_r,
        precision_defined=all_defined, recall_defined=True,
        kept_features=tuple(kept), per_class=tuple(per_class),
        macro_precision=(sum(macro_p) / len(macro_p)) if macro_p else 0.0,
        macro_recall=(sum(macro_r) / len(macro_r)) if macro_r else 0.0,
    )


@dataclass(frozen=True)
class OwnerResult:
    owner: str
    report: EvaluationReport

    @property
    def precision(self) -> float:
        return self.report.mean_precision

    @property
    def recall(self) -> float:
        return self.report.mean_recall

    @property
    def accuracy(self) -> float:
        return self.report.mean_accuracy


@dataclass(frozen=True)
class OwnerExperimentReport:
    learner: str
    k: int
    seed: int
    fs_mode: str
    owners: tuple

    @property
    def avg_precision(self) -> float:
        return sum(o.precision for o in self.owners) / len(self.owners)

    @property
    def avg_recall(self) -> float:
        return sum(o.recall for o in self.owners) / len(self.owners)

    @property
    def avg_accuracy(self) -> float:
        return sum(o.accuracy for o in self.owners) / len(self.owners)

    @property
    def perfect_precision_owners(self) -> tuple:
        return tuple(o.owner for o in self.owners if o.precision >= 1.0 - 1e-12)

    def to_text(self) -> str:
        lines = [
            f"owner experiment   learner: {self.learner}   folds: {self.k}"
            f"   seed: {self.seed}   feature-selection: {self.fs_mode}",
            f"{'owner':<12}  {'accuracy':>9}  {'precision':>9}  {'recall':>9}",
        ]
        for o in self.owners:
            lines.append(f"{o.owner:<12}  {o.accuracy:>9.4f}  {o.precision:>9.4f}"
                         f"  {o.recall:>9.4f}")
        lines.append(f"average (unweighted)  accuracy={self.avg_accuracy:.4f}"
                     f"  precision={self.avg_precision:.4f}  recall={self.avg_recall:.4f}")
        lines.append(f"owners with perfect precision:"
                     f" {len(self.perfect_precision_owners)} of {len(self.owners)}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["owner", "accuracy", "precision", "recall", "perfect_precision"])
        for o in self.owners:
            w.writerow([o.owner, repr(o.accuracy), repr(o.precision), repr(o.recall),
                        int(o.precision >= 1.0 - 1e-12)])
        w.writerow(["average", repr(self.avg_accuracy), repr(self.avg_precision),
                    repr(self.avg_recall), len(self.perfect_precision_owners)])
        return buf.getvalue()


def owner_experiment(dataset: Dataset, learner: str = "rf", k: int = 10, seed: int = 0,
                     fs_mode: str = "paradigm", tree_params: TreeParams | None = None,
                     n_trees: int | None = None, n_features_per_node: int | None = None,
                     n_jobs: int = 1, stratified: bool = False) -> OwnerExperimentReport:
    """Cross-validate an owner model for every driver and average the metrics."""
    if len(dataset.class_values) < 2:
        raise DataError("owner experiment needs at least 2 drivers")
    owners = []
    for driver in dataset.class_values:
        report = cross_validate(dataset, f"owner:{driver}", learner, k, seed,
                                fs_mode, tree_params, n_trees, n_features_per_node,
                                n_jobs, stratified)
        owners.append(OwnerResult(driver, report))
    return OwnerExperimentReport(learner, k, seed, fs_mode, tuple(owners))
