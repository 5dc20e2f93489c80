"""Decentralized extra-step method over time-varying networks.

Each iteration runs two phases. In each phase every node takes a local step
from its current iterate, the nodes gossip ``H + 1`` times, and each node
projects back onto the feasible set. A centralized extragradient reference
lives here as well; with exact one-shot averaging both produce the same
iterates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from tvsaddle.errors import DivergenceError, ValidationError
from tvsaddle.gossip import NodeStates, gossip
from tvsaddle.graph import TopologySequence
from tvsaddle.metrics import MetricPoint, consensus_error, distance_sq, gap_of
from tvsaddle.problems import SaddleProblem

log = logging.getLogger(__name__)

BLOWUP = 1e12


def step_bound(problem: SaddleProblem) -> float:
    """Largest admissible stepsize ``1 / (4 L_max)``."""
    return 1.0 / (4.0 * problem.L_max) if problem.L_max > 0 else np.inf


@dataclass
class SolverConfig:
    """Run parameters. With ``strict`` off, stepsizes above ``1/(4L)`` only warn."""

    problem: SaddleProblem
    topology: TopologySequence
    gamma: float
    H: int
    K: int
    record_every: int = 1
    z0: Optional[np.ndarray] = None
    strict: bool = True

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        bound = step_bound(self.problem)
        if self.gamma > bound * (1 + 1e-12):
            msg = f"gamma = {self.gamma:g} exceeds 1/(4 L_max) = {bound:g}"
            if self.strict:
                raise ValidationError(msg)
            log.warning("%s; convergence is not guaranteed", msg)
        if self.H < 0:
            raise ValidationError(f"H must be >= 0, got {self.H}")
        if self.K < 1:
            raise ValidationError(f"K must be >= 1, got {self.K}")
        if self.record_every < 1:
            raise ValidationError(f"record_every must be >= 1, got {self.record_every}")
        if self.topology.node_count != self.problem.M:
            raise ValidationError(
                f"topology has {self.topology.node_count} nodes, problem has {self.problem.M}"
            )
        if self.z0 is not None:
            z0 = np.asarray(self.z0, dtype=float)
            if z0.shape != (self.problem.dim,):
                raise ValidationError(f"z0 must have dimension {self.problem.dim}")
            if np.linalg.norm(self.problem.project(z0) - z0) > 1e-10:
                raise ValidationError("z0 must lie in the feasible set")
            self.z0 = z0


@dataclass
class Trajectory:
    """Recorded metrics of one run.

    ``zbar`` holds the node-mean iterate and ``zavg`` the ergodic average of
    half-step node means at each recorded iteration.
    """

    points: list = field(default_factory=list)
    zbar: list = field(default_factory=list)
    zavg: list = field(default_factory=list)
    evals: list = field(default_factory=list)
    final_states: Optional[NodeStates] = None
    iterations: int = 0

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points], dtype=float)

    def series(self, name: str, x: str = "rounds") -> list:
        return [(getattr(p, x), getattr(p, name)) for p in self.points]


def default_start(problem: SaddleProblem, seed: int = 0) -> np.ndarray:
    """Seeded standard-normal point, projected onto the feasible set."""
    rng = np.random.default_rng(seed)
    return problem.project(rng.standard_normal(problem.dim))


def _check_finite(rows: np.ndarray, k: int, traj: Trajectory) -> None:
    if not np.all(np.isfinite(rows)) or np.max(np.abs(rows)) > BLOWUP:
        raise DivergenceError(f"iterates diverged at iteration {k}", iteration=k, trajectory=traj)


def _extra_step(states: NodeStates, problem, topology, gamma, H, k=0, traj=None):
    Z = states.rows
    half_hat = Z - gamma * problem.operator_rows(Z)
    _check_finite(half_hat, k, traj)
    mixed = gossip(NodeStates(half_hat, states.round_cursor), topology, H)
    half = problem.project_rows(mixed.rows)
    full_hat = Z - gamma * problem.operator_rows(half)
    _check_finite(full_hat, k, traj)
    mixed = gossip(NodeStates(full_hat, mixed.round_cursor), topology, H)
    new = problem.project_rows(mixed.rows)
    _check_finite(new, k, traj)
    return NodeStates(half, mixed.round_cursor), NodeStates(new, mixed.round_cursor)


def tvdesm_iteration(states: NodeStates, cfg: SolverConfig, topology: TopologySequence = None) -> NodeStates:
    """One outer iteration: local extrapolation, gossip, project, update, gossip, project."""
    topology = cfg.topology if topology is None else topology
    return _extra_step(states, cfg.problem, topology, cfg.gamma, cfg.H)[1]


def _record(traj, problem, k, rounds, evals, zbar, zavg, consensus):
    traj.points.append(
        MetricPoint(
            k=k,
            rounds=rounds,
            consensus=consensus,
            dist_sq=distance_sq(zbar, problem.solution) if problem.solution is not None else None,
            gap=gap_of(problem, zavg) if problem.gap_oracle is not None else None,
        )
    )
    traj.zbar.append(zbar)
    traj.zavg.append(zavg)
    traj.evals.append(evals)


def run(cfg: SolverConfig, seed: int = 0) -> Trajectory:
    """Run ``cfg.K`` iterations from ``z0`` replicated on every node.

    Records iteration 0 and every ``record_every``-th iteration, always
    including the last. On divergence the partial trajectory rides on the
    raised DivergenceError.
    """
    problem, topology = cfg.problem, cfg.topology
    z0 = cfg.z0 if cfg.z0 is not None else default_start(problem, seed)
    states = NodeStates(np.tile(z0, (problem.M, 1)), 0)
    traj = Trajectory()
    half_sum = np.zeros(problem.dim)
    _record(traj, problem, 0, 0, 0, z0.copy(), z0.copy(), 0.0)
    for k in range(cfg.K):
        half, states = _extra_step(states, problem, topology, cfg.gamma, cfg.H, k, traj)
        half_sum += half.mean()
        n = k + 1
        traj.iterations = n
        if n % cfg.record_every == 0 or n == cfg.K:
            _record(
                traj,
                problem,
                n,
                states.round_cursor,
                2 * n,
                states.mean(),
                half_sum / n,
                consensus_error(states),
            )
    traj.final_states = states
    return traj


def centralized_extragradient(problem: SaddleProblem, z0, gamma: float, K: int, strict: bool = True) -> Trajectory:
    """Projected extragradient on the averaged field, recording every iteration."""
    if not gamma > 0:
        raise ValidationError(f"gamma must be positive, got {gamma}")
    if strict and gamma > step_bound(problem) * (1 + 1e-12):
        raise ValidationError(f"gamma = {gamma:g} exceeds 1/(4 L_max) = {step_bound(problem):g}")
    if K < 1:
        raise ValidationError(f"K must be >= 1, got {K}")
    z = problem.project(np.asarray(z0, dtype=float))
    traj = Trajectory()
    half_sum = np.zeros(problem.dim)
    _record(traj, problem, 0, 0, 0, z.copy(), z.copy(), 0.0)
    for k in range(K):
        z_half = problem.project(z - gamma * problem.operator(z))
        z = problem.project(z - gamma * problem.operator(z_half))
        _check_finite(np.concatenate([z_half, z]), k, traj)
        half_sum += z_half
        traj.iterations = k + 1
        _record(traj, problem, k + 1, 0, 2 * (k + 1), z.copy(), half_sum / (k + 1), 0.0)
    return traj
