"""Weakly supervised constrained k-means with discriminative subspace selection."""
from .core import OUTSIDE, UNLABELED, TagMap, clustering_objective, pairwise_sq_dist
from .estep import (
    RatioBudget,
    bregman_project_ratio,
    bregman_project_simplex,
    contract_o_groups,
    hard_assign,
    hard_assign_ratio,
    soft_assign,
    soft_assign_ratio,
)
from .initialization import init_prototypes, ward_clusters
from .mstep import update_centroids
from .pipeline import (
    FitConfig,
    Model,
    TaggedSequence,
    build_supervision_mask,
    fit,
    mention_f1,
    predict,
    to_linear_model,
)
from .subspace import compute_scatter, projection_dim, solve_projection

__all__ = [
    "OUTSIDE", "UNLABELED", "TagMap", "clustering_objective", "pairwise_sq_dist",
    "RatioBudget", "bregman_project_ratio", "bregman_project_simplex", "contract_o_groups",
    "hard_assign", "hard_assign_ratio", "soft_assign", "soft_assign_ratio",
    "init_prototypes", "ward_clusters", "update_centroids",
    "FitConfig", "Model", "TaggedSequence", "build_supervision_mask", "fit",
    "mention_f1", "predict", "to_linear_model",
    "compute_scatter", "projection_dim", "solve_projection",
]
