import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from driverid.base import ConfigError, MISSING
from driverid.selection import (
    FeatureRanking,
    RankEntry,
    apply_selection,
    rank_features,
    ranking_csv,
    ranking_report,
    select_feature_subset,
)

from .oracles import categorical_rank_oracle, numeric_rank_oracle
from .test_tree import mkds


def ranking_from(ranks, timestamp=()):
    """ranks: list of (feature, rank); order given is schema order."""
    entries = [RankEntry(name, i, float(r), name in timestamp)
               for i, (name, r) in enumerate(ranks)]
    entries.sort(key=lambda e: (e.rank, e.index))
    return FeatureRanking(tuple(entries))


HAND_TRACE = ranking_from(
    [("throttle", 0.1), ("rpm", 0.3), ("speed", 0.5), ("fuel", 0.0), ("hour", 0.05)],
    timestamp=("hour",),
)


def test_hand_traced_selection():
    subset = apply_selection(HAND_TRACE, "paradigm")
    assert set(subset.kept) == {"rpm", "speed", "hour"}
    assert subset.discarded_zero == ("fuel",)
    assert subset.discarded_below_average == ("throttle",)
    assert subset.average_rank == pytest.approx(0.3)


def test_single_nonzero_feature_discarded_at_boundary():
    # a lone non-timestamp feature satisfies sum <= average (r <= r) and is
    # discarded; timestamp features remain
    ranking = ranking_from([("speed", 0.4), ("hour", 0.2)], timestamp=("hour",))
    subset = apply_selection(ranking, "paradigm")
    assert subset.kept == ("hour",)
    assert subset.discarded_below_average == ("speed",)
    assert subset.note is not None


def test_all_nonzero_timestamp_features_survive():
    ranking = ranking_from(
        [("a", 0.05), ("b", 0.06), ("c", 0.5), ("hour", 0.001), ("minute", 0.9)],
        timestamp=("hour", "minute"))
    subset = apply_selection(ranking, "paradigm")
    assert {"hour", "minute"} <= set(subset.kept)


def test_zero_rank_timestamp_features_are_dropped():
    ranking = ranking_from([("a", 0.3), ("b", 0.4), ("year", 0.0)],
                           timestamp=("year",))
    subset = apply_selection(ranking, "paradigm")
    assert "year" in subset.discarded_zero
    assert "year" not in subset.kept


def test_discarded_prefix_property():
    ranking = ranking_from(
        [("f1", 0.11), ("f2", 0.27), ("f3", 0.02), ("f4", 0.55), ("f5", 0.31)])
    subset = apply_selection(ranking, "paradigm")
    ascending = [e.feature for e in ranking.entries if not e.timestamp_correlated
                 and e.rank > 0]
    k = len(subset.discarded_below_average)
    assert list(subset.discarded_below_average) == ascending[:k]


@given(st.integers(min_value=2, max_value=9), st.integers(min_value=1, max_value=1000))
def test_selection_invariant_under_positive_scaling(n, scale_millis):
    rng = np.random.default_rng(n * 1000 + scale_millis)
    ranks = [(f"f{i}", float(rng.uniform(0, 1))) for i in range(n)]
    ts = tuple(f"f{i}" for i in range(n) if rng.uniform() < 0.3)
    base = apply_selection(ranking_from(ranks, ts), "paradigm")
    scale = scale_millis / 250.0
    scaled = apply_selection(
        ranking_from([(f, r * scale) for f, r in ranks], ts), "paradigm")
    assert base.kept == scaled.kept
    assert base.discarded_zero == scaled.discarded_zero
    assert base.discarded_below_average == scaled.discarded_below_average


def test_individual_rule_differs_from_cumulative():
    # cumulative keeps 0.3 (0.1+0.3 > 0.3); individual discards it (0.3 <= 0.3)
    ranking = ranking_from([("a", 0.1), ("b", 0.3), ("c", 0.5)])
    cumulative = apply_selection(ranking, "paradigm")
    individual = apply_selection(ranking, "individual")
    assert set(cumulative.kept) == {"b", "c"}
    assert set(individual.kept) == {"c"}


def test_mode_off_keeps_everything():
    subset = apply_selection(HAND_TRACE, "off")
    assert set(subset.kept) == {"throttle", "rpm", "speed", "fuel", "hour"}
    assert subset.discarded_zero == ()


def test_unknown_mode_rejected():
    with pytest.raises(ConfigError):
        apply_selection(HAND_TRACE, "bogus")


def test_all_zero_non_timestamp_warns():
    ranking = ranking_from([("a", 0.0), ("hour", 0.2)], timestamp=("hour",))
    subset = apply_selection(ranking, "paradigm")
    assert subset.kept == ("hour",)
    assert subset.note is not None


# --- ranking against the independent oracle ---------------------------------

def test_rank_label_copy_feature_is_top():
    ds = mkds({"copy": [1, 1, 2, 2], "noise": [1, 2, 1, 2]},
              ["A", "A", "B", "B"])
    ranking = rank_features(ds)
    assert ranking.entries[-1].feature == "copy"
    assert ranking.entries[-1].rank == pytest.approx(1.0, abs=1e-9)


def test_rank_constant_feature_is_zero():
    ds = mkds({"const": [5, 5, 5, 5], "x": [1, 2, 3, 4]}, ["A", "B", "A", "B"])
    assert ranking_rank(ds, "const") == 0.0


def ranking_rank(ds, name):
    return rank_features(ds).rank_of(name)


def test_ranks_match_oracle_on_synthetic_table():
    cols = {
        "a": [1, 1, 2, 2, 3, 3, 4, 4],
        "b": [1, 2, 1, 2, 1, 2, 1, 2],
        "c": [5.0, 5.5, 5.0, 6.0, 6.5, 6.0, 7.0, 7.5],
        "road": ["x", "x", "y", "y", "x", "y", "x", "y"],
    }
    drivers = ["P", "P", "P", "Q", "P", "Q", "Q", "Q"]
    ds = mkds(cols, drivers, categorical=("road",))
    ranking = rank_features(ds)
    for name in ("a", "b", "c"):
        assert ranking.rank_of(name) == pytest.approx(
            numeric_rank_oracle(cols[name], drivers), abs=1e-9)
    assert ranking.rank_of("road") == pytest.approx(
        categorical_rank_oracle(cols["road"], drivers), abs=1e-9)


def test_ranking_handles_missing_values():
    cols = {"x": [1, 2, MISSING, 10, 11, MISSING]}
    drivers = ["A", "A", "A", "B", "B", "B"]
    ds = mkds(cols, drivers)
    assert rank_features(ds).rank_of("x") == pytest.approx(
        numeric_rank_oracle(cols["x"], drivers), abs=1e-9)


def test_ranking_sorted_ascending_with_index_ties():
    ds = mkds({"u": [1, 1, 1, 1], "v": [2, 2, 2, 2], "w": [1, 2, 1, 2]},
              ["A", "B", "A", "B"])
    ranking = rank_features(ds)
    ranks = [e.rank for e in ranking.entries]
    assert ranks == sorted(ranks)
    zero = [e for e in ranking.entries if e.rank == 0.0]
    assert [e.index for e in zero] == sorted(e.index for e in zero)


def test_select_feature_subset_deterministic(alice_bob):
    s1 = select_feature_subset(alice_bob, "paradigm")
    s2 = select_feature_subset(alice_bob, "paradigm")
    assert s1 == s2


def test_reports_render(alice_bob):
    ranking = rank_features(alice_bob)
    subset = apply_selection(ranking, "paradigm")
    text = ranking_report(ranking, subset)
    assert "kept" in text and "average non-timestamp rank" in text
    rows = ranking_csv(ranking, subset).splitlines()
    assert rows[0] == "feature,rank,timestamp_correlated,status"
    assert len(rows) == len(alice_bob.schema) + 1
