"""Phi-weighted Cheeger N-clusters and p-Laplacian eigenvalues on discrete domains."""

__version__ = "0.1.0"

from .cheeger import CheegerResult, cheeger_constant, cheeger_dinkelbach, cheeger_enumerate, threshold_ratio
from .eigen import EigenPair, el_residual, lambda_1p
from .experiments import SweepRow, SweepTable, sweep_p, sweep_phi, verify_certificates
from .graph import (
    ChamberStats,
    DirichletGraph,
    GridSpec,
    InvalidClusterError,
    InvalidDomainError,
    Labeling,
    build_grid,
    cluster_to_function,
    complement_domain,
    evaluate_cluster,
    per_vol,
)
from .partition import (
    SolveReport,
    brute_force,
    extract_levelsets,
    is_one_adjusted,
    one_adjust_sweep,
    shrink_to_cheeger_subsets,
    solve_H,
    solve_Lp,
)
from .phi import PhiSpec, certify_phi, eval_phi, parse_phi

__all__ = [
    "ChamberStats",
    "CheegerResult",
    "DirichletGraph",
    "EigenPair",
    "GridSpec",
    "InvalidClusterError",
    "InvalidDomainError",
    "Labeling",
    "PhiSpec",
    "SolveReport",
    "SweepRow",
    "SweepTable",
    "brute_force",
    "build_grid",
    "certify_phi",
    "cheeger_constant",
    "cheeger_dinkelbach",
    "cheeger_enumerate",
    "cluster_to_function",
    "complement_domain",
    "el_residual",
    "eval_phi",
    "evaluate_cluster",
    "extract_levelsets",
    "is_one_adjusted",
    "lambda_1p",
    "one_adjust_sweep",
    "parse_phi",
    "per_vol",
    "shrink_to_cheeger_subsets",
    "solve_H",
    "solve_Lp",
    "sweep_p",
    "sweep_phi",
    "threshold_ratio",
    "verify_certificates",
]
