"""
核心功能模块：相似度核、自治动力学、聚类与理论上界
"""

from pyodrs.core.errors import (
    ContractViolation,
    DomainError,
    NoBoundAvailableError,
    RatingsParseError,
    DenseBlockError,
    TrainingDivergedError,
)
from pyodrs.core.kernels import (
    SimilarityMethod,
    KernelConfig,
    euclidean_distance,
    cosine_similarity,
    connectivity,
    connectivity_matrix,
)
from pyodrs.core.clusters import ClusterPartition, clusters
from pyodrs.core.dynamics import (
    OpinionMatrix,
    Trajectory,
    DiameterResult,
    weight_matrix,
    step,
    diameter,
    simulate,
)
from pyodrs.core.bounds import (
    SphericalCodeTable,
    load_spherical_code_table,
    distance_cluster_bound,
    toth_min_distance,
    angle_cluster_bound,
    cluster_bound,
    epsilon_grid,
)
from pyodrs.core.sweep import SweepRow, bound_sweep

__all__ = [
    "ContractViolation",
    "DomainError",
    "NoBoundAvailableError",
    "RatingsParseError",
    "DenseBlockError",
    "TrainingDivergedError",
    "SimilarityMethod",
    "KernelConfig",
    "euclidean_distance",
    "cosine_similarity",
    "connectivity",
    "connectivity_matrix",
    "ClusterPartition",
    "clusters",
    "OpinionMatrix",
    "Trajectory",
    "DiameterResult",
    "weight_matrix",
    "step",
    "diameter",
    "simulate",
    "SphericalCodeTable",
    "load_spherical_code_table",
    "distance_cluster_bound",
    "toth_min_distance",
    "angle_cluster_bound",
    "cluster_bound",
    "epsilon_grid",
    "SweepRow",
    "bound_sweep",
]
