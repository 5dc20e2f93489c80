"""Time-varying communication graphs.

A :class:`TopologySequence` maps a communication-round index ``t`` to the
undirected edge set active in that round. Every generator here returns a
graph that is connected at every round; edges are stored as ``(i, j)`` with
``i < j``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from tvsaddle.errors import ValidationError

STATIC_KINDS = ("ring", "path", "complete", "star")
_MIN_NODES = {"ring": 3, "path": 2, "complete": 2, "star": 2}

Edges = tuple[tuple[int, int], ...]


def _static_edges(kind: str, M: int, center: int = 0) -> Edges:
    if kind == "path":
        edges = [(i, i + 1) for i in range(M - 1)]
    elif kind == "ring":
        edges = [(i, i + 1) for i in range(M - 1)] + [(0, M - 1)]
    elif kind == "complete":
        edges = [(i, j) for i in range(M) for j in range(i + 1, M)]
    elif kind == "star":
        edges = [(min(center, j), max(center, j)) for j in range(M) if j != center]
    else:
        raise ValidationError(f"unknown static topology {kind!r}")
    return tuple(sorted(set(edges)))


def _random_tree_repair(M: int, edges: set, rng: np.random.Generator) -> None:
    perm = rng.permutation(M)
    for i in range(1, M):
        j = perm[rng.integers(0, i)]
        a, b = int(perm[i]), int(j)
        edges.add((min(a, b), max(a, b)))


@lru_cache(maxsize=4096)
def _random_edges(M: int, p: float, seed: int, t: int) -> Edges:
    rng = np.random.default_rng([seed, t])
    iu, ju = np.triu_indices(M, k=1)
    keep = rng.random(iu.size) < p
    edges = {(int(i), int(j)) for i, j, k in zip(iu, ju, keep) if k}
    if not is_connected(edges, M):
        _random_tree_repair(M, edges, rng)
    return tuple(sorted(edges))


@dataclass(frozen=True)
class TopologySequence:
    """Deterministic sequence of connected graphs on ``node_count`` vertices.

    ``kind`` is one of the static kinds, ``"rotating_star"`` or ``"random"``.
    """

    kind: str
    node_count: int
    period: int = 1
    edge_prob: float = 1.0
    generator_seed: int = 0

    def edges_at(self, t: int) -> Edges:
        if t < 0:
            raise ValidationError(f"round index must be non-negative, got {t}")
        if self.kind in STATIC_KINDS:
            return _static_edges(self.kind, self.node_count)
        if self.kind == "rotating_star":
            return _static_edges("star", self.node_count, self.center_at(t))
        if self.kind == "random":
            return _random_edges(self.node_count, self.edge_prob, self.generator_seed, t)
        raise ValidationError(f"unknown topology kind {self.kind!r}")

    def center_at(self, t: int) -> int:
        if self.kind != "rotating_star":
            raise ValidationError("center_at only applies to the rotating star")
        return (t // self.period) % self.node_count

    @property
    def cycle_length(self) -> int | None:
        """Number of rounds after which the sequence repeats, or None if aperiodic."""
        if self.kind in STATIC_KINDS:
            return 1
        if self.kind == "rotating_star":
            return self.period * self.node_count
        return None

    def describe(self) -> str:
        if self.kind == "rotating_star":
            return f"rotating_star:period={self.period}"
        if self.kind == "random":
            return f"random:p={self.edge_prob:g},seed={self.generator_seed}"
        return self.kind


def make_static(kind: str, M: int) -> TopologySequence:
    if kind not in STATIC_KINDS:
        raise ValidationError(f"unknown static topology {kind!r}; expected one of {STATIC_KINDS}")
    if M < _MIN_NODES[kind]:
        raise ValidationError(f"{kind} topology needs M >= {_MIN_NODES[kind]}, got {M}")
    return TopologySequence(kind=kind, node_count=int(M))


def make_rotating_star(M: int, period: int = 1) -> TopologySequence:
    """Star graph whose center moves to the next node every ``period`` rounds."""
    if M < 2:
        raise ValidationError(f"rotating star needs M >= 2, got {M}")
    if period < 1:
        raise ValidationError(f"period must be >= 1, got {period}")
    return TopologySequence(kind="rotating_star", node_count=int(M), period=int(period))


def make_random_connected(M: int, edge_prob: float, seed: int) -> TopologySequence:
    """Erdos-Renyi graph per round, repaired with a random spanning tree when disconnected."""
    if M < 2:
        raise ValidationError(f"random topology needs M >= 2, got {M}")
    if not 0.0 < edge_prob <= 1.0:
        raise ValidationError(f"edge_prob must lie in (0, 1], got {edge_prob}")
    return TopologySequence(
        kind="random", node_count=int(M), edge_prob=float(edge_prob), generator_seed=int(seed)
    )


def is_connected(edges, M: int) -> bool:
    adj = [[] for _ in range(M)]
    for i, j in edges:
        if not (0 <= i < M and 0 <= j < M):
            raise ValidationError(f"edge ({i}, {j}) out of range for M={M}")
        adj[i].append(j)
        adj[j].append(i)
    if M == 0:
        return False
    seen = [False] * M
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return all(seen)


def _parse_params(text: str) -> dict[str, str]:
    params = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise ValidationError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    return params


def parse_topology(spec: str, M: int | None) -> TopologySequence:
    """Build a topology from a config string such as ``"rotating_star:period=2"``."""
    kind, _, rest = spec.strip().partition(":")
    params = _parse_params(rest)
    if M is None:
        raise ValidationError(f"topology {kind!r} requires M (number of nodes)")
    try:
        if kind in STATIC_KINDS:
            if params:
                raise ValidationError(f"{kind} takes no parameters, got {sorted(params)}")
            return make_static(kind, M)
        if kind == "rotating_star":
            unknown = set(params) - {"period"}
            if unknown:
                raise ValidationError(f"unknown rotating_star parameters {sorted(unknown)}")
            return make_rotating_star(M, int(params.get("period", 1)))
        if kind == "random":
            unknown = set(params) - {"p", "seed"}
            if unknown:
                raise ValidationError(f"unknown random parameters {sorted(unknown)}")
            return make_random_connected(M, float(params.get("p", 0.3)), int(params.get("seed", 0)))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad topology parameter in {spec!r}: {exc}") from exc
    raise ValidationError(f"unknown topology kind {kind!r}")
