"""Dataset representativeness diagnostics for tree models.

Measures how well a labeled subset covers a reference dataset (the directed
per-class Chebyshev covering radius), trains binary decision trees and
gradient-boosted ensembles from scratch, verifies the margin-based
accuracy-preservation property as an executable check, and runs subset-sampling
experiments correlating coverage with feature-importance drift.
"""
from ._version import __version__
from .dataset import (
    LabeledDataset,
    MinMaxScaler,
    SplitSpec,
    generate_circles,
    generate_gaussian_mixture,
    load_csv,
    minmax_scale,
    sample_subset,
    split,
)
from .representativeness import (
    BalanceCheck,
    ReprAssignment,
    construct_balanced_subset,
    epsilon_of,
    identity_assignment,
    is_gamma_balanced,
    perturbed_copy,
)
from .tree import (
    DecisionTreeClassifier,
    PreservationVerdict,
    TreeNode,
    check_accuracy_preservation,
    entropy,
    gini,
    info_gain,
)
from .boosting import GradientBoostingBinaryClassifier
from .metrics import (
    CorrelationResult,
    ImportanceRanking,
    rank_distance,
    rank_features,
    regularized_incomplete_beta,
    spearman,
    spearman_p_value,
)
from .experiment import (
    CampaignSummary,
    ExperimentConfig,
    ExperimentReport,
    MixtureSpec,
    SubsetRecord,
    derive_seed,
    export_boundary_grid,
    load_model,
    run_experiment,
    run_preservation_campaign,
    write_report,
)

__all__ = [
    "__version__",
    "LabeledDataset",
    "MinMaxScaler",
    "SplitSpec",
    "generate_circles",
    "generate_gaussian_mixture",
    "load_csv",
    "minmax_scale",
    "sample_subset",
    "split",
    "BalanceCheck",
    "ReprAssignment",
    "construct_balanced_subset",
    "epsilon_of",
    "identity_assignment",
    "is_gamma_balanced",
    "perturbed_copy",
    "DecisionTreeClassifier",
    "PreservationVerdict",
    "TreeNode",
    "check_accuracy_preservation",
    "entropy",
    "gini",
    "info_gain",
    "GradientBoostingBinaryClassifier",
    "CorrelationResult",
    "ImportanceRanking",
    "rank_distance",
    "rank_features",
    "regularized_incomplete_beta",
    "spearman",
    "spearman_p_value",
    "CampaignSummary",
    "ExperimentConfig",
    "ExperimentReport",
    "MixtureSpec",
    "SubsetRecord",
    "derive_seed",
    "export_boundary_grid",
    "load_model",
    "run_experiment",
    "run_preservation_campaign",
    "write_report",
]
