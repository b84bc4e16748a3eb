"""Flexible gradient tracking for decentralized stochastic optimization.

Each round runs ``d2`` local gradient-tracking updates followed by ``d1``
gossip sweeps over a doubly stochastic mixing matrix.
"""

from .analysis import (
    RoundMetrics,
    TheoryParams,
    comm_complexity,
    comp_complexity,
    contraction_factor,
    lyapunov_coeffs,
    lyapunov_value,
    m_sigma,
    max_stepsize,
    measure_round,
    minimize_weighted_cost,
    steps_to_accuracy,
    weighted_cost,
)
from .engine import AlgoConfig, NetworkState, Trace, run, run_round
from .problem import QuadraticProblem, generate_problem
from .topology import TopologySpec, WeightMatrix, build_weight_matrix, mix, spectral_radius_sq

__version__ = "0.1.0"

__all__ = [
    "AlgoConfig",
    "NetworkState",
    "QuadraticProblem",
    "RoundMetrics",
    "TheoryParams",
    "TopologySpec",
    "Trace",
    "WeightMatrix",
    "build_weight_matrix",
    "comm_complexity",
    "comp_complexity",
    "contraction_factor",
    "generate_problem",
    "lyapunov_coeffs",
    "lyapunov_value",
    "m_sigma",
    "max_stepsize",
    "measure_round",
    "minimize_weighted_cost",
    "mix",
    "run",
    "run_round",
    "spectral_radius_sq",
    "steps_to_accuracy",
    "weighted_cost",
]
