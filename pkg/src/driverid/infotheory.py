"""Entropy and gain-ratio computations that drive tree induction and ranking.

Conventions, applied uniformly here and in the learners:

* logarithms are base 2; ``0 * log2(0)`` counts as 0;
* missing values are excluded from split statistics and the information
  gain is scaled by the fraction of known values;
* split information (the entropy of the partitioning feature) is computed
  over the known-value branches only;
* a partition with zero split information cannot be scored: ``gain_ratio``
  returns ``None`` and callers treat the feature as unsplittable (rank 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import _kernels as kernels
from .base import MISSING

GAIN_EPS = kernels.GAIN_EPS


def _as_counts(table) -> list[float]:
    if isinstance(table, Mapping):
        counts = list(table.values())
    else:
        counts = list(table)
    if any(c < 0 for c in counts):
        raise ValueError("counts must be non-negative")
    return counts


def entropy(label_counts) -> float:
    """Entropy in bits of a label count table (mapping or iterable of counts)."""
    counts = _as_counts(label_counts)
    total = sum(counts)
    if not counts or total <= 0:
        raise ValueError("entropy requires at least one counted instance")
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


@dataclass(frozen=True)
class Partition:
    """Label-count tables for each branch of a partitioning feature."""

    groups: tuple

    def __init__(self, groups: Iterable[Mapping]):
        frozen = tuple(dict(g) for g in groups)
        for g in frozen:
            if any(c < 0 for c in g.values()):
                raise ValueError("counts must be non-negative")
        if sum(sum(g.values()) for g in frozen) <= 0:
            raise ValueError("partition must count at least one instance")
        object.__setattr__(self, "groups", frozen)

    @property
    def total(self) -> float:
        return sum(sum(g.values()) for g in self.groups)

    def pooled(self) -> dict:
        out: dict = {}
        for g in self.groups:
            for label, c in g.items():
                out[label] = out.get(label, 0) + c
        return out


def conditional_entropy(partition: Partition) -> float:
    """Weighted mean of the per-branch entropies."""
    total = partition.total
    h = 0.0
    for g in partition.groups:
        size = sum(g.values())
        if size > 0:
            h += (size / total) * entropy(g)
    return h


def intrinsic_entropy(partition: Partition) -> float:
    """Entropy of the branch-size distribution itself."""
    total = partition.total
    h = 0.0
    for g in partition.groups:
        size = sum(g.values())
        if size > 0:
            p = size / total
            h -= p * math.log2(p)
    return h


def gain_ratio(label_counts, partition: Partition) -> float | None:
    """Information gain of the partition normalized by its intrinsic entropy.

    Returns ``None`` (undefined) when the intrinsic entropy is zero, i.e.
    the partition has a single non-empty branch.  Raises if the partition
    does not pool back to ``label_counts``.
    """
    if isinstance(label_counts, Mapping):
        labels = dict(label_counts)
    else:
        raise TypeError("label_counts must be a mapping of label -> count")
    pooled = partition.pooled()
    keys = set(labels) | set(pooled)
    for k in keys:
        if not math.isclose(labels.get(k, 0), pooled.get(k, 0), rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError("partition does not partition the labeled instances")
    split_info = intrinsic_entropy(partition)
    if split_info <= 0.0:
        return None
    return (entropy(labels) - conditional_entropy(partition)) / split_info


class SplitResult(NamedTuple):
    threshold: float
    gain_ratio: float
    gain: float


def best_numeric_split(values: Sequence[tuple]) -> SplitResult | None:
    """Best binary threshold for a numeric feature.

    ``values`` is a sequence of ``(value_or_MISSING, label)`` pairs.
    Candidate thresholds are the midpoints between consecutive distinct
    sorted known values; the returned threshold maximizes the gain ratio
    of the ``{<= t, > t}`` partition, ties toward the smaller threshold.
    Returns ``None`` when no split has positive gain (all values missing,
    a single distinct value, or uniform labels).
    """
    known = [(v, l) for v, l in values if v is not MISSING]
    if len(known) < 2:
        return None
    labels: list = []
    codes = {}
    y = np.empty(len(known), dtype=np.int32)
    x = np.empty(len(known), dtype=np.float64)
    for i, (v, l) in enumerate(known):
        if l not in codes:
            codes[l] = len(labels)
            labels.append(l)
        y[i] = codes[l]
        x[i] = v
    res = best_split_arrays(x, y, np.ones(len(known)), len(labels),
                            n_missing_weight=float(len(values) - len(known)))
    if res is None:
        return None
    threshold, scaled_gain, ratio = res
    return SplitResult(threshold, ratio, scaled_gain)


def best_split_arrays(col, y, w, n_classes, min_branch_weight: float = 0.0,
                      n_missing_weight: float | None = None):
    """Array-level split search used by the learners.

    ``col`` is float64 with NaN marking missing values.  Returns
    ``(threshold, scaled_gain, gain_ratio)`` or ``None``.  When
    ``n_missing_weight`` is given the column is already known-only and that
    weight is added to the total for gain scaling.
    """
    if n_missing_weight is None:
        known = ~np.isnan(col)
        xs = col[known]
        if xs.shape[0] < 2:
            return None
        ys = y[known]
        ws = w[known]
        total_w = float(np.sum(w))
    else:
        xs, ys, ws = col, y, w
        if xs.shape[0] < 2:
            return None
        total_w = float(np.sum(w)) + n_missing_weight
    known_w = float(np.sum(ws))
    order = np.argsort(xs, kind="mergesort")
    xs = np.ascontiguousarray(xs[order])
    ys = np.ascontiguousarray(ys[order], dtype=np.int32)
    ws = np.ascontiguousarray(ws[order])
    pos, gain, split_info = kernels.split_sweep(xs, ys, ws, n_classes, min_branch_weight)
    if pos < 0:
        return None
    scaled = (known_w / total_w) * gain
    if scaled <= GAIN_EPS:
        return None
    threshold = (xs[pos - 1] + xs[pos]) / 2.0
    return float(threshold), float(scaled), float(scaled / split_info)


def categorical_gain_arrays(codes, y, w, n_classes, n_values,
                            min_branch_weight: float = 0.0):
    """Gain-ratio of the value partition of a categorical column.

    ``codes`` is int32 with -1 marking missing values.  Requires at least
    two non-empty branches and, when ``min_branch_weight`` is positive, at
    least two branches at that weight.  Returns
    ``(scaled_gain, gain_ratio, counts_matrix)`` or ``None``.
    """
    known = codes >= 0
    ck = codes[known]
    if ck.shape[0] == 0:
        return None
    total_w = float(np.sum(w))
    m = kernels.group_tally(np.ascontiguousarray(ck, dtype=np.int32),
                            np.ascontiguousarray(y[known], dtype=np.int32),
                            np.ascontiguousarray(w[known]),
                            n_values, n_classes)
    group_w = m.sum(axis=1)
    nonempty = group_w > 0.0
    if int(np.count_nonzero(nonempty)) < 2:
        return None
    if min_branch_weight > 0.0 and int(np.count_nonzero(group_w >= min_branch_weight)) < 2:
        return None
    known_w = float(group_w.sum())
    class_tot = m.sum(axis=0)
    h_total = _entropy_of(class_tot, known_w)
    cond = 0.0
    split_info = 0.0
    for g in np.nonzero(nonempty)[0]:
        share = group_w[g] / known_w
        cond += share * _entropy_of(m[g], group_w[g])
        split_info -= share * math.log2(share)
    gain = h_total - cond
    if gain <= GAIN_EPS:
        return None
    scaled = (known_w / total_w) * gain
    if scaled <= GAIN_EPS:
        return None
    return float(scaled), float(scaled / split_info), m


def _entropy_of(counts, total: float) -> float:
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h
