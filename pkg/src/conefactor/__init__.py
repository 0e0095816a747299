"""Endmember detection by l_{1,inf}-regularized nonnegative self-representation.

Data columns are normalized, reduced to a few hundred candidate columns
by k-means, and a convex model picks the candidates needed to represent
all data as nonnegative combinations. An outlier-robust variant, a
refinement step and evaluation harnesses are included.
"""

from .data import (
    MatrixParseError,
    NormalizedData,
    drop_small_columns,
    normalize_columns,
    read_matrix,
    write_matrix,
    write_pgm,
)
from .evaluation import (
    MatchReport,
    Row0Certificate,
    StabilityConfig,
    angle_deg,
    match_and_score,
    projection_stats,
    row0_oracle,
    run_stability,
)
from .extended import feasibility_gap, objective_extended, solve_extended
from .projections import (
    DiskConstraint,
    OutlierBall,
    project_disk,
    project_outlier_ball,
    project_pos_l1,
    prox_rowmax_nonneg,
)
from .reduction import ReducedProblem, kmeans_reduce, reduce_data, self_representation, similarity_weights
from .refinement import EndmemberSet, nnls, project_ball_nonneg, refine, solve_abundances
from .solver import SolveResult, SolverConfig, l1inf, objective_basic, select_endmembers, solve_basic

__version__ = "0.1.0"

__all__ = [
    "DiskConstraint",
    "EndmemberSet",
    "MatchReport",
    "MatrixParseError",
    "NormalizedData",
    "OutlierBall",
    "ReducedProblem",
    "Row0Certificate",
    "SolveResult",
    "SolverConfig",
    "StabilityConfig",
    "angle_deg",
    "drop_small_columns",
    "feasibility_gap",
    "kmeans_reduce",
    "l1inf",
    "match_and_score",
    "nnls",
    "normalize_columns",
    "objective_basic",
    "objective_extended",
    "project_ball_nonneg",
    "project_disk",
    "project_outlier_ball",
    "project_pos_l1",
    "projection_stats",
    "prox_rowmax_nonneg",
    "read_matrix",
    "reduce_data",
    "refine",
    "row0_oracle",
    "run_stability",
    "select_endmembers",
    "self_representation",
    "similarity_weights",
    "solve_abundances",
    "solve_basic",
    "solve_extended",
    "write_matrix",
    "write_pgm",
]
