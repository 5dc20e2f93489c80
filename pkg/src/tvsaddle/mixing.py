"""Gossip matrices, their spectra, and the normalized mixing matrices.

The gossip matrix of a round is the unweighted graph Laplacian of that
round's edge set. Mixing uses ``I - W / lambda_max(W)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from tvsaddle.errors import ValidationError
from tvsaddle.graph import Edges, TopologySequence
from tvsaddle.linalg import SYM_RTOL, sym_eigvals

PSD_TOL = 1e-10
KERNEL_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GossipMatrix:
    W: np.ndarray
    lambda_max: float
    lambda_min_nonzero: float
    round: int

    @property
    def chi(self) -> float:
        return self.lambda_max / self.lambda_min_nonzero


@dataclass(frozen=True)
class MixingMatrix:
    Wt: np.ndarray
    round: int


def laplacian_matrix(edges, M: int) -> np.ndarray:
    L = np.zeros((M, M))
    for i, j in edges:
        L[i, j] -= 1.0
        L[j, i] -= 1.0
        L[i, i] += 1.0
        L[j, j] += 1.0
    return L


@lru_cache(maxsize=1024)
def _laplacian_with_spectrum(edges: Edges, M: int) -> tuple[np.ndarray, float, float]:
    L = laplacian_matrix(edges, M)
    eig = sym_eigvals(L)
    lam_max = float(eig[0])
    lam_min = float(eig[-2]) if M > 1 else 0.0
    return _frozen(L), lam_max, lam_min


def laplacian_of(topology: TopologySequence, t: int) -> GossipMatrix:
    """Gossip matrix of round ``t``; raises ValidationError if that graph is disconnected."""
    M = topology.node_count
    L, lam_max, lam_min = _laplacian_with_spectrum(topology.edges_at(t), M)
    if lam_min <= KERNEL_TOL * max(lam_max, 1.0):
        raise ValidationError(
            f"graph at round {t} is disconnected (lambda_(M-1) = {lam_min:.3e})"
        )
    return GossipMatrix(W=L, lambda_max=lam_max, lambda_min_nonzero=lam_min, round=t)


@lru_cache(maxsize=1024)
def _mixing_from(edges: Edges, M: int) -> np.ndarray:
    L, lam_max, _ = _laplacian_with_spectrum(edges, M)
    return _frozen(np.eye(M) - L / lam_max)


def mixing_of(g: GossipMatrix) -> MixingMatrix:
    if not g.lambda_max > 0:
        raise ValidationError(f"lambda_max must be positive, got {g.lambda_max}")
    M = g.W.shape[0]
    return MixingMatrix(Wt=_frozen(np.eye(M) - g.W / g.lambda_max), round=g.round)


def mixing_at(topology: TopologySequence, t: int) -> np.ndarray:
    """Mixing matrix of round ``t`` (read-only array, cached per edge set)."""
    edges = topology.edges_at(t)
    Wt = _mixing_from(edges, topology.node_count)
    _, _, lam_min = _laplacian_with_spectrum(edges, topology.node_count)
    if lam_min <= KERNEL_TOL:
        raise ValidationError(f"graph at round {t} is disconnected")
    return Wt


def chi_of(topology: TopologySequence, horizon: int) -> float:
    """Worst condition number ``lambda_1 / lambda_(M-1)`` over rounds ``0..horizon-1``."""
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")
    cycle = topology.cycle_length
    rounds = range(min(horizon, cycle)) if cycle is not None else range(horizon)
    return max(laplacian_of(topology, t).chi for t in rounds)


def rho_of(chi: float) -> float:
    if not chi >= 1.0:
        raise ValidationError(f"chi must be >= 1, got {chi}")
    return 1.0 - 1.0 / chi


def validate_assumption4(g, topology: TopologySequence, t: int) -> list[str]:
    """List every gossip-matrix condition that ``g`` violates for round ``t``.

    ``g`` may be a :class:`GossipMatrix` or a plain square array. An empty
    list means the matrix is symmetric, PSD, has exactly the constant vectors
    as its kernel and is supported on the round's edges.
    """
    W = np.asarray(g.W if isinstance(g, GossipMatrix) else g, dtype=float)
    M = topology.node_count
    if W.shape != (M, M):
        return [f"shape: expected {(M, M)}, got {W.shape}"]
    if not np.all(np.isfinite(W)):
        return ["finite: matrix has non-finite entries"]
    violations = []
    scale = max(float(np.max(np.abs(W))), np.finfo(float).tiny)
    asym = float(np.max(np.abs(W - W.T)))
    if asym > SYM_RTOL * scale:
        violations.append(f"symmetric: max |W - W^T| = {asym:.3e}")
        W = 0.5 * (W + W.T)
    eig = sym_eigvals(W)
    if eig[-1] < -PSD_TOL:
        violations.append(f"psd: smallest eigenvalue {eig[-1]:.3e}")
    ones_residual = float(np.max(np.abs(W @ np.ones(M))))
    if ones_residual > KERNEL_TOL * max(scale, 1.0):
        violations.append(f"kernel: W 1 != 0 (max residual {ones_residual:.3e})")
    if M > 1 and eig[-2] <= KERNEL_TOL:
        violations.append(
            f"kernel: second-smallest eigenvalue {eig[-2]:.3e}, kernel larger than constants"
        )
    allowed = np.eye(M, dtype=bool)
    for i, j in topology.edges_at(t):
        allowed[i, j] = allowed[j, i] = True
    bad = np.argwhere((W != 0) & ~allowed)
    if bad.size:
        pairs = sorted({(int(min(i, j)), int(max(i, j))) for i, j in bad})
        violations.append(f"sparsity: nonzero entries off the round-{t} edges at {pairs}")
    return violations
