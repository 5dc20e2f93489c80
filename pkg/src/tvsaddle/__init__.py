"""Decentralized saddle-point optimization over time-varying networks."""

from tvsaddle.errors import (
    ConfigError,
    DivergenceError,
    SolverError,
    UnsupportedMetricError,
    ValidationError,
)
from tvsaddle.graph import (
    TopologySequence,
    is_connected,
    make_random_connected,
    make_rotating_star,
    make_static,
)
from tvsaddle.gossip import NodeStates, gossip, gossip_round, rounds_for_accuracy
from tvsaddle.mixing import chi_of, laplacian_of, mixing_of, rho_of, validate_assumption4
from tvsaddle.problems import (
    MatrixGameSpec,
    QuadraticSpec,
    SaddleProblem,
    make_matrix_game,
    make_quadratic,
    matching_pennies_spec,
    random_matrix_game_spec,
    random_quadratic_spec,
    regularize,
)
from tvsaddle.metrics import consensus_error, distance_sq, fit_linear_rate, fit_sublinear_rate, gap_of
from tvsaddle.solver import SolverConfig, Trajectory, centralized_extragradient, run

__version__ = "0.1.0"
