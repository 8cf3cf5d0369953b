"""Driver identification from timestamped vehicle telemetry.

Decomposes timestamps into calendar features, ranks features by gain
ratio, trains C4.5-style trees or random forests per vehicle owner (or
over all drivers), and evaluates them with k-fold cross-validation.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .base import MISSING, ConfigError, DataError, DriverIdError, FeatureKind, SchemaError
from .dataset import (
    Dataset,
    FeatureDescriptor,
    IngestConfig,
    Interaction,
    decompose_timestamp,
    exclude_sparse_drivers,
    label_for_owner,
    parse_csv,
    split_folds,
)
from .evaluation import (
    ConfusionCounts,
    ConfusionMatrix,
    EvaluationReport,
    accuracy,
    cross_validate,
    owner_experiment,
    precision,
    recall,
)
from .forest import Forest, bootstrap_sample, predict_forest, train_forest
from .infotheory import (
    Partition,
    best_numeric_split,
    conditional_entropy,
    entropy,
    gain_ratio,
    intrinsic_entropy,
)
from .pipeline import (
    MultiDriverModel,
    OwnerModel,
    generate_model,
    identify,
    load_bundle,
    predict_driver,
    save_bundle,
    train_multi_driver,
)
from .selection import (
    FeatureRanking,
    SelectedSubset,
    apply_selection,
    rank_features,
    select_feature_subset,
)
from .tree import DecisionTree, TreeParams, predict_tree, prune, train_c45

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "MISSING",
    "ConfigError",
    "DataError",
    "DriverIdError",
    "FeatureKind",
    "SchemaError",
    "Dataset",
    "FeatureDescriptor",
    "IngestConfig",
    "Interaction",
    "decompose_timestamp",
    "exclude_sparse_drivers",
    "label_for_owner",
    "parse_csv",
    "split_folds",
    "ConfusionCounts",
    "ConfusionMatrix",
    "EvaluationReport",
    "accuracy",
    "cross_validate",
    "owner_experiment",
    "precision",
    "recall",
    "Forest",
    "bootstrap_sample",
    "predict_forest",
    "train_forest",
    "Partition",
    "best_numeric_split",
    "conditional_entropy",
    "entropy",
    "gain_ratio",
    "intrinsic_entropy",
    "MultiDriverModel",
    "OwnerModel",
    "generate_model",
    "identify",
    "load_bundle",
    "predict_driver",
    "save_bundle",
    "train_multi_driver",
    "FeatureRanking",
    "SelectedSubset",
    "apply_selection",
    "rank_features",
    "select_feature_subset",
    "DecisionTree",
    "TreeParams",
    "predict_tree",
    "prune",
    "train_c45",
    "__version__",
]
