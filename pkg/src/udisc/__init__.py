"""Optimum unambiguous discrimination of linearly independent pure states."""
from .ensemble import GramMatrix, StateEnsemble, dual_states, gram, random_ensemble, validate
from .errors import InputError, NumericalError, UdiscError
from .feasible import check_feasible, min_eigenvalue, principal_minor, ray_to_surface
from .povm import PovmSet, build_povm, outcome_distribution, outcome_table, simulate
from .solver import Classification, OptimumSolution, SolverConfig, certify, optimize, optimize_gram

__all__ = [
    "Classification", "GramMatrix", "InputError", "NumericalError", "OptimumSolution",
    "PovmSet", "SolverConfig", "StateEnsemble", "UdiscError", "build_povm", "certify",
    "check_feasible", "dual_states", "gram", "min_eigenvalue", "optimize", "optimize_gram",
    "outcome_distribution", "outcome_table", "principal_minor", "random_ensemble",
    "ray_to_surface", "simulate", "validate",
]
