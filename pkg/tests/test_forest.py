import numpy as np
import pytest

from driverid.base import ConfigError, MISSING
from driverid.dataset import Interaction
from driverid.forest import (
    bootstrap_sample,
    forest_from_json,
    forest_to_json,
    predict_forest,
    train_forest,
)
from driverid.tree import TreeParams, train_c45

from .test_tree import mkds


@pytest.fixture(scope="module")
def separable():
    rng = np.random.default_rng(17)
    n = 120
    speed = np.concatenate([rng.uniform(30, 49, n // 2), rng.uniform(52, 55, n // 2)])
    noise = rng.normal(size=n)
    return mkds({"speed": speed.tolist(), "noise": noise.tolist()},
                ["A"] * (n // 2) + ["B"] * (n // 2))


def test_bootstrap_single_row():
    ds = mkds({"x": [3]}, ["A"])
    out = bootstrap_sample(ds, seed=9)
    assert len(out) == 1
    assert out.instances[0] is ds.instances[0]


def test_bootstrap_deterministic():
    ds = mkds({"x": list(range(50))}, ["A"] * 25 + ["B"] * 25)
    a = bootstrap_sample(ds, seed=4)
    b = bootstrap_sample(ds, seed=4)
    assert [id(i) for i in a.instances] == [id(i) for i in b.instances]
    c = bootstrap_sample(ds, seed=5)
    assert [id(i) for i in a.instances] != [id(i) for i in c.instances]


def test_bootstrap_distinct_fraction_law():
    ds = mkds({"x": list(range(1000))}, ["A"] * 500 + ["B"] * 500)
    fractions = []
    for seed in range(60):
        sample = bootstrap_sample(ds, seed)
        fractions.append(len({id(i) for i in sample.instances}) / 1000)
    assert np.mean(fractions) == pytest.approx(0.632, abs=0.02)


def test_degenerate_forest_equals_unpruned_tree(separable):
    forest = train_forest(separable, n_trees=1, n_features_per_node=2,
                          master_seed=0, bootstrap=False)
    tree = train_c45(separable, TreeParams(min_leaf_instances=1, pruning_enabled=False))
    for inst in separable.instances:
        assert forest.predict(inst)[0] == tree.predict(inst)[0]


def test_forest_separable_training_vote_accuracy(separable):
    forest = train_forest(separable, n_trees=25, master_seed=3)
    for inst in separable.instances:
        assert forest.predict(inst)[0] == inst.driver_id


def test_forest_unanimous_share_with_all_features(separable):
    # with every feature available at each node, each tree roots on the
    # perfect separator, so training votes are unanimous
    forest = train_forest(separable, n_trees=30, n_features_per_node=2,
                          master_seed=3)
    for inst in separable.instances[::7]:
        label, share = forest.predict(inst)
        assert label == inst.driver_id
        assert share == 1.0


def test_forest_determinism_and_jobs(separable):
    f1 = train_forest(separable, n_trees=12, master_seed=42)
    f2 = train_forest(separable, n_trees=12, master_seed=42)
    f3 = train_forest(separable, n_trees=12, master_seed=42, n_jobs=2)
    assert forest_to_json(f1) == forest_to_json(f2) == forest_to_json(f3)
    f4 = train_forest(separable, n_trees=12, master_seed=43)
    assert forest_to_json(f1) != forest_to_json(f4)


def test_forest_votes_match_tree_tally(separable):
    forest = train_forest(separable, n_trees=9, master_seed=7)
    for inst in separable.instances[::11]:
        votes = {}
        for tree in forest.trees:
            label = tree.predict(inst)[0]
            votes[label] = votes.get(label, 0) + 1
        label, share = forest.predict(inst)
        assert votes[label] == max(votes.values())
        assert share == pytest.approx(votes[label] / forest.n_trees)


def test_vote_tie_breaks_by_training_prior():
    # 60/40 priors for classes "0"/"1"; a constructed 1-1 vote tie keeps "0"
    from driverid.forest import Forest, predict_forest_batch
    from driverid.tree import DecisionTree, Leaf, Split
    from driverid.base import FeatureKind
    from driverid.dataset import FeatureDescriptor

    schema = (FeatureDescriptor("x", FeatureKind.NUMERIC, False, 0),)
    params = TreeParams(min_leaf_instances=1, pruning_enabled=False)

    def stump(predicts_zero: bool):
        dist = np.array([1.0, 0.0]) if predicts_zero else np.array([0.0, 1.0])
        return DecisionTree(Leaf(dist), ("0", "1"), schema, {}, params)

    forest = Forest((stump(True), stump(False)), (1, 2), 1, ("0", "1"),
                    (0.6, 0.4), 0)
    label, share = forest.predict(Interaction((1.0,), "?"))
    assert label == "0"
    assert share == pytest.approx(0.5)

    # with reversed priors the same tie goes to "1"
    forest2 = Forest((stump(True), stump(False)), (1, 2), 1, ("0", "1"),
                     (0.3, 0.7), 0)
    assert forest2.predict(Interaction((1.0,), "?"))[0] == "1"


def test_tree_order_permutation_invariant(separable):
    from driverid.forest import Forest

    forest = train_forest(separable, n_trees=7, master_seed=1)
    shuffled = Forest(tuple(reversed(forest.trees)), forest.per_tree_seed,
                      forest.n_features_per_node, forest.classes, forest.priors,
                      forest.master_seed)
    for inst in separable.instances[::13]:
        assert forest.predict(inst) == shuffled.predict(inst)


def test_all_features_no_bootstrap_trees_identical(separable):
    from driverid.tree import tree_to_json

    forest = train_forest(separable, n_trees=4, n_features_per_node=2,
                          master_seed=5, bootstrap=False)
    docs = {tree_to_json(t) for t in forest.trees}
    assert len(docs) == 1


def test_forest_handles_missing_values(separable):
    forest = train_forest(separable, n_trees=10, master_seed=2)
    label, share = predict_forest(forest, Interaction((MISSING, 0.0), "?"))
    assert label in ("A", "B")
    assert 0.0 < share <= 1.0


def test_forest_param_validation(separable):
    with pytest.raises(ConfigError):
        train_forest(separable, n_trees=0)
    with pytest.raises(ConfigError):
        train_forest(separable, n_features_per_node=3)
    with pytest.raises(ConfigError):
        train_forest(separable, n_features_per_node=0)


def test_forest_json_round_trip(separable):
    forest = train_forest(separable, n_trees=5, master_seed=8)
    text = forest_to_json(forest)
    clone = forest_from_json(text)
    assert forest_to_json(clone) == text
    for inst in separable.instances[::17]:
        assert clone.predict(inst) == forest.predict(inst)
