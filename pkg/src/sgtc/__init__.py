"""Deterministic tensor completion driven by the spectral gap of the sampling pattern."""

__version__ = "0.1.0"

from .atomic import (
    GROTHENDIECK_KG,
    AtomicDecomposition,
    SignAtom,
    atomic_norm,
    atomic_rank_bound,
    enumerate_atoms,
    maxq_value_of_factors,
)
from .bounds import BoundReport, check_discrepancy_bounds, evaluate_bound, worst_case_discrepancy_ratio
from .experiment import ExperimentConfig, TrialRecord, fit_line, gen_target, run_sweep, sample_poisson_counts
from .graphs import ConvergenceError, RegularGraph, base_graph, ring_graph, second_eigenvalue, switch_chain
from .masks import (
    SamplingMask,
    adjacency_tensor,
    discrepancy,
    estimate_lambda2,
    grid_mask,
    lift_graph,
    shuffle_mask,
)
from .solvers import (
    MaxQnormCompletion,
    PoissonCompletion,
    ProjectedRidgeCompletion,
    RidgeCompletion,
    SolverConfig,
    SolverResult,
    solve_maxqnorm,
    solve_poisson,
    solve_ridge,
    solve_ridge_projected,
)
from .tensor import CpFactors, cp_to_dense, hadamard, kronecker, norm_eval, subtensor

__all__ = [
    "GROTHENDIECK_KG", "AtomicDecomposition", "SignAtom", "atomic_norm", "atomic_rank_bound",
    "enumerate_atoms", "maxq_value_of_factors", "BoundReport", "check_discrepancy_bounds",
    "evaluate_bound", "worst_case_discrepancy_ratio", "ExperimentConfig", "TrialRecord", "fit_line",
    "gen_target", "run_sweep", "sample_poisson_counts", "ConvergenceError", "RegularGraph",
    "base_graph", "ring_graph", "second_eigenvalue", "switch_chain", "SamplingMask",
    "adjacency_tensor", "discrepancy", "estimate_lambda2", "grid_mask", "lift_graph", "shuffle_mask",
    "MaxQnormCompletion", "PoissonCompletion", "ProjectedRidgeCompletion", "RidgeCompletion",
    "SolverConfig", "SolverResult", "solve_maxqnorm", "solve_poisson", "solve_ridge",
    "solve_ridge_projected", "CpFactors", "cp_to_dense", "hadamard", "kronecker", "norm_eval",
    "subtensor",
]
