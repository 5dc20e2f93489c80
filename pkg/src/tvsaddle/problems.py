"""Saddle-point instances split across M nodes.

Node ``m`` holds ``f_m(x, y)`` and exposes the field
``F_m(z) = (grad_x f_m, -grad_y f_m)``. All instance families here have
affine fields ``F_m(z) = J_m z + b_m``, so a problem stores the stacked
Jacobians and offsets and evaluates every node in one ``einsum``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from tvsaddle.errors import SolverError, ValidationError
from tvsaddle.linalg import project_simplex, solve_linear, sym_eigvals

SIMPLEX_PRODUCT_DIAMETER = 2.0 * math.sqrt(2.0)
_SPECTRAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SaddleProblem:
    """Decentralized saddle-point problem with affine local fields.

    ``diameter`` is None for an unbounded feasible set, ``project`` is None
    when the feasible set is the whole space.
    """

    name: str
    nx: int
    ny: int
    jac: np.ndarray  # (M, d, d)
    shift: np.ndarray  # (M, d)
    L_global: float
    L_max: float
    mu: float
    diameter: Optional[float] = None
    projector: Optional[Callable[[np.ndarray], np.ndarray]] = None
    solution: Optional[np.ndarray] = None
    gap_oracle: Optional[Callable[[np.ndarray], float]] = None
    local_value: Optional[Callable[[int, np.ndarray, np.ndarray], float]] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.jac, self.shift):
            arr.setflags(write=False)
        d = self.nx + self.ny
        if self.jac.shape != (self.M, d, d) or self.shift.shape != (self.M, d):
            raise ValidationError("operator arrays do not match (M, nx + ny)")
        if self.mu > 0 and self.diameter is None and self.solution is None:
            raise ValidationError("strongly monotone unbounded problems must carry a solution")

    @property
    def M(self) -> int:
        return self.jac.shape[0]

    @property
    def dim(self) -> int:
        return self.nx + self.ny

    @property
    def constrained(self) -> bool:
        return self.projector is not None

    def split(self, z):
        z = np.asarray(z, dtype=float)
        return z[: self.nx], z[self.nx :]

    def local_operator(self, m: int, z) -> np.ndarray:
        return self.jac[m] @ np.asarray(z, dtype=float) + self.shift[m]

    def operator_rows(self, Z) -> np.ndarray:
        """Evaluate ``F_m`` at row ``m`` of ``Z`` for every node at once."""
        return np.einsum("mij,mj->mi", self.jac, Z) + self.shift

    def operator(self, z) -> np.ndarray:
        """The averaged field ``F = (1/M) sum_m F_m``."""
        z = np.asarray(z, dtype=float)
        return np.mean(self.jac @ z + self.shift, axis=0)

    def project(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.projector is None:
            return z.copy()
        return self.projector(z)

    def project_rows(self, Z) -> np.ndarray:
        if self.projector is None:
            return Z
        return np.stack([self.projector(row) for row in Z])

    def value(self, x, y) -> float:
        if self.local_value is None:
            raise ValidationError(f"{self.name} has no objective values")
        return float(np.mean([self.local_value(m, x, y) for m in range(self.M)]))

    @property
    def mean_jacobian(self) -> np.ndarray:
        return self.jac.mean(axis=0)

    @property
    def mean_shift(self) -> np.ndarray:
        return self.shift.mean(axis=0)


def _spectral_norm(J: np.ndarray) -> float:
    return float(np.linalg.norm(J, 2))


def _product_simplex_projector(nx: int):
    def project(z):
        return np.concatenate([project_simplex(z[:nx]), project_simplex(z[nx:])])

    return project


# ---------------------------------------------------------------- quadratic


@dataclass(frozen=True)
class QuadraticSpec:
    """Per-node data of ``f_m = x'A x/2 + x'B y - y'C y/2 + a'x - c'y``.

    ``mu`` and ``L_max`` default to the tightest values the matrices allow.
    """

    A: tuple
    B: tuple
    C: tuple
    a: tuple
    c: tuple
    mu: Optional[float] = None
    L_max: Optional[float] = None
    seed: Optional[int] = None


def _check_spectrum(mat, name, lo, hi):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {mat.shape}")
    eig = sym_eigvals(mat)
    if eig[-1] < lo - _SPECTRAL_TOL:
        raise ValidationError(f"{name} has eigenvalue {eig[-1]:.6g} below mu = {lo:.6g}")
    if hi is not None and eig[0] > hi * (1 + _SPECTRAL_TOL):
        raise ValidationError(f"{name} has eigenvalue {eig[0]:.6g} above L_max = {hi:.6g}")
    return eig


def make_quadratic(spec: QuadraticSpec) -> SaddleProblem:
    M = len(spec.A)
    if not (len(spec.B) == len(spec.C) == len(spec.a) == len(spec.c) == M) or M == 0:
        raise ValidationError("QuadraticSpec lists must all have length M >= 1")
    A = [np.atleast_2d(np.asarray(v, dtype=float)) for v in spec.A]
    B = [np.atleast_2d(np.asarray(v, dtype=float)) for v in spec.B]
    C = [np.atleast_2d(np.asarray(v, dtype=float)) for v in spec.C]
    a = [np.atleast_1d(np.asarray(v, dtype=float)) for v in spec.a]
    c = [np.atleast_1d(np.asarray(v, dtype=float)) for v in spec.c]
    nx, ny = A[0].shape[0], C[0].shape[0]
    for m in range(M):
        if A[m].shape != (nx, nx) or B[m].shape != (nx, ny) or C[m].shape != (ny, ny):
            raise ValidationError(f"node {m}: block shapes do not match nx={nx}, ny={ny}")
        if a[m].shape != (nx,) or c[m].shape != (ny,):
            raise ValidationError(f"node {m}: linear terms do not match nx={nx}, ny={ny}")
        for mat, nm in ((A[m], f"A[{m}]"), (C[m], f"C[{m}]")):
            if np.max(np.abs(mat - mat.T)) > 1e-12 * max(1.0, np.max(np.abs(mat))):
                raise ValidationError(f"{nm} is not symmetric")

    jac = np.stack([np.block([[A[m], B[m]], [-B[m].T, C[m]]]) for m in range(M)])
    shift = np.stack([np.concatenate([a[m], c[m]]) for m in range(M)])

    if spec.mu is None:
        mu = min(min(sym_eigvals(A[m])[-1], sym_eigvals(C[m])[-1]) for m in range(M))
    else:
        mu = float(spec.mu)
    if mu < 0:
        raise ValidationError(f"mu must be non-negative, got {mu}")
    local_norms = [_spectral_norm(J) for J in jac]
    L_max = max(local_norms) if spec.L_max is None else float(spec.L_max)
    for m in range(M):
        _check_spectrum(A[m], f"A[{m}]", mu, L_max)
        _check_spectrum(C[m], f"C[{m}]", mu, L_max)
        if local_norms[m] > L_max * (1 + _SPECTRAL_TOL):
            raise ValidationError(
                f"node {m}: operator norm {local_norms[m]:.6g} exceeds L_max = {L_max:.6g}"
            )

    Jbar, bbar = jac.mean(axis=0), shift.mean(axis=0)
    solution = solve_linear(Jbar, -bbar)
    Abar, Bbar, Cbar = Jbar[:nx, :nx], Jbar[:nx, nx:], Jbar[nx:, nx:]
    abar, cbar = bbar[:nx], bbar[nx:]

    def local_value(m, x, y):
        return float(
            0.5 * x @ A[m] @ x + x @ B[m] @ y - 0.5 * y @ C[m] @ y + a[m] @ x - c[m] @ y
        )

    gap_oracle = None
    if mu > 0:

        def gap_oracle(z):
            z = np.asarray(z, dtype=float)
            x, y = z[:nx], z[nx:]
            # max over y: C y = B'x - c ; min over x: A x = -(B y + a)
            gy = Bbar.T @ x - cbar
            gx = Bbar @ y + abar
            upper = 0.5 * x @ Abar @ x + abar @ x + 0.5 * gy @ solve_linear(Cbar, gy)
            lower = -0.5 * y @ Cbar @ y - cbar @ y - 0.5 * gx @ solve_linear(Abar, gx)
            return float(upper - lower)

    return SaddleProblem(
        name="quadratic",
        nx=nx,
        ny=ny,
        jac=jac,
        shift=shift,
        L_global=_spectral_norm(Jbar),
        L_max=L_max,
        mu=mu,
        solution=solution,
        gap_oracle=gap_oracle,
        local_value=local_value,
        meta={"seed": spec.seed},
    )


def _random_orthogonal(rng, n, base=None, het=0.0):
    G = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G if base is None else base + het * G)
    return Q * np.sign(np.diag(R))


def random_quadratic_spec(
    M: int,
    nx: int,
    ny: int,
    mu: float,
    L: float,
    het: float = 0.5,
    coupling: float = 0.3,
    seed: int = 0,
) -> QuadraticSpec:
    """Random heterogeneous SCSC quadratic with ``mu I <= A_m, C_m`` and ``||J_m|| <= L``.

    Block spectra span ``[mu, (1 - coupling) L]`` with both ends attained and
    every ``B_m`` has spectral norm at most ``coupling * L``. ``het`` scales how
    far each node's eigenbasis and linear terms drift from the shared ones.
    """
    if not 0 < mu <= (1 - coupling) * L:
        raise ValidationError(f"need 0 < mu <= (1 - coupling) L, got mu={mu}, L={L}")
    if not 0 <= coupling < 1:
        raise ValidationError(f"coupling must lie in [0, 1), got {coupling}")
    if het < 0:
        raise ValidationError(f"het must be non-negative, got {het}")
    rng = np.random.default_rng(seed)
    top = (1 - coupling) * L

    def spectrum(n):
        s = np.sort(rng.uniform(mu, top, n))
        s[0] = mu
        if n > 1:
            s[-1] = top
        return s

    sA, sC = spectrum(nx), spectrum(ny)
    QA0, QC0 = _random_orthogonal(rng, nx), _random_orthogonal(rng, ny)
    B0 = rng.standard_normal((nx, ny))
    B0 *= coupling * L / max(_spectral_norm(B0), 1e-300)
    a0, c0 = rng.standard_normal(nx), rng.standard_normal(ny)

    A, B, C, a, c = [], [], [], [], []
    for _ in range(M):
        QA = _random_orthogonal(rng, nx, QA0, het)
        QC = _random_orthogonal(rng, ny, QC0, het)
        Am = QA @ np.diag(sA) @ QA.T
        Cm = QC @ np.diag(sC) @ QC.T
        Bm = B0 + het * coupling * L * rng.standard_normal((nx, ny)) / math.sqrt(nx * ny)
        Bm *= min(1.0, coupling * L / max(_spectral_norm(Bm), 1e-300))
        A.append(0.5 * (Am + Am.T))
        C.append(0.5 * (Cm + Cm.T))
        B.append(Bm)
        a.append(a0 + het * rng.standard_normal(nx))
        c.append(c0 + het * rng.standard_normal(ny))
    return QuadraticSpec(tuple(A), tuple(B), tuple(C), tuple(a), tuple(c), mu=mu, L_max=L, seed=seed)


# -------------------------------------------------------------- matrix game


@dataclass(frozen=True)
class MatrixGameSpec:
    """Per-node payoffs of ``f_m(x, y) = x' A_m y`` over two probability simplices."""

    payoffs: tuple
    seed: Optional[int] = None


def simplex_vi_solution(jac, shift, nx, ny, max_dim=8) -> Optional[np.ndarray]:
    """Solve the affine variational inequality ``F(z) = jac z + shift`` over a simplex product.

    Enumerates supports and solves the KKT system restricted to each one.
    Returns None when no support yields a verified solution or the problem is
    too large to enumerate.
    """
    if nx > max_dim or ny > max_dim:
        return None
    d = nx + ny
    project = _product_simplex_projector(nx)
    supports_x = [s for r in range(1, nx + 1) for s in itertools.combinations(range(nx), r)]
    supports_y = [s for r in range(1, ny + 1) for s in itertools.combinations(range(ny), r)]
    pairs = sorted(itertools.product(supports_x, supports_y), key=lambda p: len(p[0]) + len(p[1]))
    for sx, sy in pairs:
        idx = list(sx) + [nx + j for j in sy]
        k = len(idx)
        # unknowns: z restricted to idx, then multipliers for the two sum constraints
        K = np.zeros((k + 2, k + 2))
        rhs = np.zeros(k + 2)
        K[:k, :k] = jac[np.ix_(idx, idx)]
        rhs[:k] = -shift[idx]
        for r in range(k):
            K[r, k if r < len(sx) else k + 1] = 1.0
        K[k, : len(sx)] = 1.0
        K[k + 1, len(sx) : k] = 1.0
        rhs[k] = rhs[k + 1] = 1.0
        try:
            sol = solve_linear(K, rhs)
        except SolverError:
            continue
        z = np.zeros(d)
        z[idx] = sol[:k]
        if np.min(z) < -1e-12:
            continue
        z = project(z)
        F = jac @ z + shift
        lam_x, lam_y = sol[k], sol[k + 1]
        slack = np.concatenate([F[:nx] + lam_x, F[nx:] + lam_y])
        if np.min(slack) < -1e-10:
            continue
        if np.linalg.norm(z - project(z - 1e-2 * F)) <= 1e-10:
            return z
    return None


def make_matrix_game(spec: MatrixGameSpec) -> SaddleProblem:
    payoffs = [np.atleast_2d(np.asarray(A, dtype=float)) for A in spec.payoffs]
    if not payoffs:
        raise ValidationError("matrix game needs at least one payoff matrix")
    nx, ny = payoffs[0].shape
    for m, A in enumerate(payoffs):
        if A.shape != (nx, ny):
            raise ValidationError(f"payoff {m} has shape {A.shape}, expected {(nx, ny)}")
        if not np.all(np.isfinite(A)):
            raise ValidationError(f"payoff {m} has non-finite entries")
    d = nx + ny
    jac = np.zeros((len(payoffs), d, d))
    for m, A in enumerate(payoffs):
        jac[m, :nx, nx:] = A
        jac[m, nx:, :nx] = -A.T
    shift = np.zeros((len(payoffs), d))
    Abar = np.mean(payoffs, axis=0)

    def gap_oracle(z):
        z = np.asarray(z, dtype=float)
        x, y = z[:nx], z[nx:]
        return float(np.max(Abar.T @ x) - np.min(Abar @ y))

    def local_value(m, x, y):
        return float(x @ payoffs[m] @ y)

    return SaddleProblem(
        name="matrix_game",
        nx=nx,
        ny=ny,
        jac=jac,
        shift=shift,
        L_global=_spectral_norm(Abar),
        L_max=max(_spectral_norm(A) for A in payoffs),
        mu=0.0,
        diameter=SIMPLEX_PRODUCT_DIAMETER,
        projector=_product_simplex_projector(nx),
        solution=simplex_vi_solution(jac.mean(axis=0), shift.mean(axis=0), nx, ny),
        gap_oracle=gap_oracle,
        local_value=local_value,
        meta={"payoff_mean": Abar, "seed": spec.seed},
    )


def _heterogeneous_split(rng, base, M, het):
    noise = rng.standard_normal((M,) + base.shape)
    noise -= noise.mean(axis=0)
    return tuple(base + het * noise[m] for m in range(M))


def random_matrix_game_spec(M: int, nx: int, ny: int, het: float = 0.5, seed: int = 0) -> MatrixGameSpec:
    """Random game whose node payoffs scatter around a shared mean by ``het``."""
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((nx, ny))
    return MatrixGameSpec(_heterogeneous_split(rng, base, M, het), seed=seed)


def matching_pennies_spec(M: int = 1, het: float = 0.0, seed: int = 0) -> MatrixGameSpec:
    """Matching pennies split over M nodes; the node average is exactly the 2x2 game."""
    base = np.array([[1.0, -1.0], [-1.0, 1.0]])
    if M == 1 or het == 0.0:
        return MatrixGameSpec(tuple(base.copy() for _ in range(M)), seed=seed)
    rng = np.random.default_rng(seed)
    return MatrixGameSpec(_heterogeneous_split(rng, base, M, het), seed=seed)


# ----------------------------------------------------------- regularization


def regularize(p: SaddleProblem, eps: float, anchor) -> SaddleProblem:
    """Add ``eps/(4 D^2) (||x - x0||^2 - ||y - y0||^2)`` to every local objective.

    The result is strongly monotone with modulus ``eps / (2 D^2)``; solving it
    to ``eps/2`` accuracy solves the original problem to ``eps``.
    """
    if p.diameter is None:
        raise ValidationError("regularize needs a bounded feasible set (finite diameter D)")
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    anchor = np.asarray(anchor, dtype=float)
    if anchor.shape != (p.dim,):
        raise ValidationError(f"anchor must have dimension {p.dim}, got {anchor.shape}")
    coef = eps / (2.0 * p.diameter**2)
    nx = p.nx
    x0, y0 = anchor[:nx], anchor[nx:]
    jac = p.jac + coef * np.eye(p.dim)
    shift = p.shift - coef * anchor

    base_value = p.local_value

    def local_value(m, x, y):
        prox = 0.5 * coef * (np.sum((x - x0) ** 2) - np.sum((y - y0) ** 2))
        return base_value(m, x, y) + float(prox)

    gap_oracle = None
    solution = None
    Abar = p.meta.get("payoff_mean")
    if p.name == "matrix_game" and Abar is not None:

        def gap_oracle(z):
            z = np.asarray(z, dtype=float)
            x, y = z[:nx], z[nx:]
            yb = project_simplex(y0 + Abar.T @ x / coef)
            xb = project_simplex(x0 - Abar @ y / coef)
            upper = x @ Abar @ yb + 0.5 * coef * (np.sum((x - x0) ** 2) - np.sum((yb - y0) ** 2))
            lower = xb @ Abar @ y + 0.5 * coef * (np.sum((xb - x0) ** 2) - np.sum((y - y0) ** 2))
            return float(upper - lower)

        solution = simplex_vi_solution(jac.mean(axis=0), shift.mean(axis=0), nx, p.ny)

    return SaddleProblem(
        name=f"{p.name}+regularized",
        nx=nx,
        ny=p.ny,
        jac=jac,
        shift=shift,
        L_global=p.L_global + coef,
        L_max=p.L_max + coef,
        mu=p.mu + coef,
        diameter=p.diameter,
        projector=p.projector,
        solution=solution,
        gap_oracle=gap_oracle,
        local_value=local_value if base_value is not None else None,
        meta={**p.meta, "base": p, "eps": eps, "anchor": anchor, "reg_coef": coef},
    )


# ------------------------------------------------------------ diagnostics


def _random_feasible_pairs(p: SaddleProblem, trials: int, seed):
    rng = np.random.default_rng(seed)
    Z1 = rng.standard_normal((trials, p.dim)) * 2.0
    Z2 = rng.standard_normal((trials, p.dim)) * 2.0
    if p.constrained:
        Z1 = p.project_rows(Z1)
        Z2 = p.project_rows(Z2)
    return Z1, Z2


def check_lipschitz(p: SaddleProblem, trials: int = 1000, seed=0) -> float:
    """Largest observed ``||F(z1) - F(z2)|| / ||z1 - z2||`` over random feasible pairs."""
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    Z1, Z2 = _random_feasible_pairs(p, trials, seed)
    best = 0.0
    for z1, z2 in zip(Z1, Z2):
        dz = np.linalg.norm(z1 - z2)
        # pairs projected onto (almost) the same point only measure rounding noise
        if dz <= 1e-9 * max(1.0, np.linalg.norm(z1)):
            continue
        dF = np.linalg.norm(p.operator(z1) - p.operator(z2))
        best = max(best, float(dF / dz))
    return best


def check_monotone(p: SaddleProblem, trials: int = 1000, seed=0) -> float:
    """Smallest observed ``<F(z1) - F(z2), z1 - z2> - mu ||z1 - z2||^2``; negative means a violation."""
    Z1, Z2 = _random_feasible_pairs(p, trials, seed)
    worst = math.inf
    for z1, z2 in zip(Z1, Z2):
        dz = z1 - z2
        dF = p.operator(z1) - p.operator(z2)
        worst = min(worst, float(dF @ dz - p.mu * dz @ dz))
    return worst


# ------------------------------------------------------------ config strings


def _parse_params(text):
    params = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise ValidationError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    return params


_PROBLEM_KEYS = {
    "quadratic": {"nx", "ny", "mu", "L", "het", "coupling", "seed"},
    "matrix_game": {"nx", "ny", "het", "seed"},
    "matching_pennies": {"het", "seed"},
}


def parse_problem(spec: str, M: int) -> tuple[SaddleProblem, Optional[float]]:
    """Parse e.g. ``"quadratic:nx=3,ny=3,mu=0.1,L=1,het=0.5,seed=1"``.

    A ``"+regularize:eps=0.1"`` suffix is split off and returned as the
    second element; the caller applies it once the anchor (starting point) is
    known.
    """
    base, _, modifier = spec.strip().partition("+")
    eps = None
    if modifier:
        mkind, _, mrest = modifier.partition(":")
        if mkind.strip() != "regularize":
            raise ValidationError(f"unknown problem modifier {mkind!r}")
        mparams = _parse_params(mrest)
        if set(mparams) != {"eps"}:
            raise ValidationError("regularize takes exactly one parameter, eps")
        eps = float(mparams["eps"])
        if not eps > 0:
            raise ValidationError(f"regularize eps must be positive, got {eps}")
    kind, _, rest = base.partition(":")
    kind = kind.strip()
    if kind not in _PROBLEM_KEYS:
        raise ValidationError(f"unknown problem kind {kind!r}; expected one of {sorted(_PROBLEM_KEYS)}")
    params = _parse_params(rest)
    unknown = set(params) - _PROBLEM_KEYS[kind]
    if unknown:
        raise ValidationError(f"unknown {kind} parameters {sorted(unknown)}")
    try:
        seed = int(params.get("seed", 0))
        het = float(params.get("het", 0.5))
        if kind == "quadratic":
            qspec = random_quadratic_spec(
                M,
                int(params.get("nx", 2)),
                int(params.get("ny", 2)),
                mu=float(params.get("mu", 0.1)),
                L=float(params.get("L", 1.0)),
                het=het,
                coupling=float(params.get("coupling", 0.3)),
                seed=seed,
            )
            problem = make_quadratic(qspec)
        elif kind == "matrix_game":
            problem = make_matrix_game(
                random_matrix_game_spec(M, int(params.get("nx", 2)), int(params.get("ny", 2)), het, seed)
            )
        else:
            problem = make_matrix_game(matching_pennies_spec(M, het, seed))
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(f"bad problem parameter in {spec!r}: {exc}") from exc
    if eps is not None and problem.diameter is None:
        raise ValidationError(f"{kind} is unbounded and cannot be regularized")
    return problem, eps
