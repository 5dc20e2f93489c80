"""Gossip averaging: repeated multiplication by the per-round mixing matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from tvsaddle.errors import ValidationError
from tvsaddle.graph import TopologySequence
from tvsaddle.mixing import mixing_at, rho_of


@dataclass(frozen=True)
class NodeStates:
    """One row per node plus the global communication-round counter.

    ``rows`` has shape ``(M, d)``. The counter is the topology round index the
    next gossip multiplication will use.
    """

    rows: np.ndarray
    round_cursor: int = 0

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim == 1:
            rows = rows[:, None]
        if rows.ndim != 2:
            raise ValidationError(f"rows must be an (M, d) array, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValidationError("node states contain non-finite entries")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def M(self) -> int:
        return self.rows.shape[0]

    def mean(self) -> np.ndarray:
        return self.rows.mean(axis=0)


def _check(s: NodeStates, topology: TopologySequence) -> None:
    if s.M != topology.node_count:
        raise ValidationError(
            f"states have {s.M} rows but the topology has {topology.node_count} nodes"
        )


def gossip_round(s: NodeStates, topology: TopologySequence) -> NodeStates:
    _check(s, topology)
    Wt = mixing_at(topology, s.round_cursor)
    return NodeStates(Wt @ s.rows, s.round_cursor + 1)


@lru_cache(maxsize=4096)
def _window_product(topology: TopologySequence, start: int, count: int) -> np.ndarray:
    P = np.eye(topology.node_count)
    for t in range(start, start + count):
        P = mixing_at(topology, t) @ P
    P.setflags(write=False)
    return P


def gossip(s: NodeStates, topology: TopologySequence, H: int) -> NodeStates:
    """Run the gossip loop for h = 0..H, i.e. ``H + 1`` multiplications.

    For periodic topologies the product of the ``H + 1`` mixing matrices is
    cached per phase of the cycle, so long runs do one matrix product per call.
    """
    if H < 0:
        raise ValidationError(f"H must be >= 0, got {H}")
    _check(s, topology)
    n = H + 1
    cycle = topology.cycle_length
    if cycle is None:
        out = s
        for _ in range(n):
            out = gossip_round(out, topology)
        return out
    P = _window_product(topology, s.round_cursor % cycle, n)
    return NodeStates(P @ s.rows, s.round_cursor + n)


def rounds_for_accuracy(chi: float, target_contraction: float) -> int:
    """Smallest number of multiplications ``n`` with ``rho**n <= target``, ``rho = 1 - 1/chi``."""
    if not 0.0 < target_contraction < 1.0:
        raise ValidationError(f"target contraction must lie in (0, 1), got {target_contraction}")
    rho = rho_of(chi)
    if rho == 0.0:
        return 1
    n = max(1, math.ceil(math.log(target_contraction) / math.log(rho) - 1e-9))
    # guard the ceiling against log rounding in both directions
    while rho**n > target_contraction:
        n += 1
    while n > 1 and rho ** (n - 1) <= target_contraction:
        n -= 1
    return n
