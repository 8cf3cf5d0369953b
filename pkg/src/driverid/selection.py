"""Gain-ratio feature ranking and subset selection.

Ranking scores every predictor by the gain ratio of its value partition
(categorical) or of its best binary threshold (numeric); an undefined gain
ratio ranks 0.  Selection sorts ranks ascending, drops rank-0 features,
then walks the non-timestamp features accumulating their ranks and
discards the walked prefix while the running sum stays at or below the
mean non-timestamp rank.  Features derived from the timestamp are always
kept when their rank is nonzero.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .base import ConfigError, FeatureKind
from .dataset import Dataset
from .infotheory import best_split_arrays, categorical_gain_arrays
from .tree import TrainMatrix

SELECTION_MODES = ("paradigm", "individual", "off")


@dataclass(frozen=True)
class RankEntry:
    feature: str
    index: int
    rank: float
    timestamp_correlated: bool


@dataclass(frozen=True)
class FeatureRanking:
    """Per-feature gain-ratio ranks, sorted ascending (ties by index)."""

    entries: tuple

    @property
    def timestamp_set(self) -> tuple:
        return tuple(e.feature for e in self.entries if e.timestamp_correlated)

    def rank_of(self, feature: str) -> float:
        for e in self.entries:
            if e.feature == feature:
                return e.rank
        raise KeyError(feature)


@dataclass(frozen=True)
class SelectedSubset:
    kept: tuple
    discarded_zero: tuple
    discarded_below_average: tuple
    average_rank: float
    note: str | None = None


def rank_features(dataset: Dataset) -> FeatureRanking:
    """Gain-ratio rank for every predictor, ascending."""
    tm = TrainMatrix(dataset)
    n_classes = len(tm.classes)
    w = np.ones(tm.n, dtype=np.float64)
    entries = []
    for f in dataset.schema:
        col = tm.cols[f.index]
        if f.kind is FeatureKind.NUMERIC:
            res = best_split_arrays(col, tm.y, w, n_classes)
            rank = res[2] if res is not None else 0.0
        else:
            res = categorical_gain_arrays(col, tm.y, w, n_classes,
                                          len(tm.cat_values[f.index]))
            rank = res[1] if res is not None else 0.0
        entries.append(RankEntry(f.name, f.index, float(rank), f.timestamp_correlated))
    entries.sort(key=lambda e: (e.rank, e.index))
    return FeatureRanking(tuple(entries))


def apply_selection(ranking: FeatureRanking, mode: str = "paradigm") -> SelectedSubset:
    """Select a feature subset from a ranking.

    ``paradigm``  cumulative low-rank prefix discard (the default);
    ``individual`` discard each non-timestamp feature whose own rank is at
    or below the average; ``off`` keep every predictor.
    """
    if mode not in SELECTION_MODES:
        raise ConfigError(f"selection mode must be one of {SELECTION_MODES}, got {mode!r}")
    if mode == "off":
        kept = tuple(e.feature for e in sorted(ranking.entries, key=lambda e: e.index))
        return SelectedSubset(kept, (), (), 0.0, None)

    zero = [e for e in ranking.entries if e.rank <= 0.0]
    nonzero = [e for e in ranking.entries if e.rank > 0.0]
    ts = [e for e in nonzero if e.timestamp_correlated]
    plain = [e for e in nonzero if not e.timestamp_correlated]

    note = None
    discarded = []
    survivors = []
    if not plain:
        average = 0.0
        note = "no non-timestamp feature has a nonzero rank; keeping timestamp features only"
    else:
        average = sum(e.rank for e in plain) / len(plain)
        if mode == "paradigm":
            running = 0.0
            pos = 0
            for e in plain:  # already ascending
                running += e.rank
                if running <= average:
                    discarded.append(e)
                    pos += 1
                else:
                    break
            survivors = plain[pos:]
        else:
            discarded = [e for e in plain if e.rank <= average]
            survivors = [e for e in plain if e.rank > average]
        if not survivors:
            note = ("every non-timestamp feature fell at or below the average rank;"
                    " keeping timestamp features only")

    kept_entries = survivors + ts
    kept = tuple(e.feature for e in sorted(kept_entries, key=lambda e: e.index))
    return SelectedSubset(
        kept=kept,
        discarded_zero=tuple(e.feature for e in sorted(zero, key=lambda e: e.index)),
        discarded_below_average=tuple(e.feature for e in discarded),
        average_rank=float(average),
        note=note,
    )


def select_feature_subset(dataset: Dataset, mode: str = "paradigm") -> SelectedSubset:
    """Rank the dataset's predictors and select the subset in one step."""
    return apply_selection(rank_features(dataset), mode)


def ranking_report(ranking: FeatureRanking, subset: SelectedSubset) -> str:
    """Human-readable table of ranks and kept/discarded status."""
    kept = set(subset.kept)
    zero = set(subset.discarded_zero)
    width = max([len("feature")] + [len(e.feature) for e in ranking.entries])
    lines = [f"{'feature':<{width}}  {'rank':>12}  time  status"]
    for e in ranking.entries:
        if e.feature in kept:
            status = "kept"
        elif e.feature in zero:
            status = "discarded (rank 0)"
        else:
            status = "discarded (below average)"
        flag = "yes" if e.timestamp_correlated else "no"
        lines.append(f"{e.feature:<{width}}  {e.rank:>12.6f}  {flag:<4}  {status}")
    lines.append(f"average non-timestamp rank: {subset.average_rank:.6f}")
    lines.append(f"kept {len(subset.kept)} of {len(ranking.entries)} features")
    if subset.note:
        lines.append(f"note: {subset.note}")
    return "\n".join(lines) + "\n"


def ranking_csv(ranking: FeatureRanking, subset: SelectedSubset) -> str:
    kept = set(subset.kept)
    zero = set(subset.discarded_zero)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["feature", "rank", "timestamp_correlated", "status"])
    for e in ranking.entries:
        status = ("kept" if e.feature in kept
                  else "discarded_zero" if e.feature in zero
                  else "discarded_below_average")
        writer.writerow([e.feature, repr(e.rank), int(e.timestamp_correlated), status])
    return buf.getvalue()
