"""Deterministic 2D active graph-SLAM exploration with D-optimal frontier selection."""

from ._topoexplore import (
    EpisodeResult,
    ExplorationConfig,
    Pose2,
    RelativePose2,
    SensorModel,
    WeightedPoseGraph,
    World,
    apply_novelty,
    between,
    compose,
    dopt_graph,
    dopt_matrix,
    inverse,
    kiefer_criterion,
    lc_probability,
    load_world,
    log_tree_weight,
    normalize_angle,
    parse_graph,
    parse_world,
    run_episode,
)

__all__ = [
    "EpisodeResult",
    "ExplorationConfig",
    "Pose2",
    "RelativePose2",
    "SensorModel",
    "WeightedPoseGraph",
    "World",
    "apply_novelty",
    "between",
    "compose",
    "dopt_graph",
    "dopt_matrix",
    "inverse",
    "kiefer_criterion",
    "lc_probability",
    "load_world",
    "log_tree_weight",
    "normalize_angle",
    "parse_graph",
    "parse_world",
    "run_episode",
]
