"""Dense linear-algebra primitives and Euclidean projections.

Everything here works on small dense numpy arrays. The symmetric eigensolver
is a cyclic Jacobi sweep, which is plenty for the graph sizes simulated here
(a few hundred nodes at most).
"""

from __future__ import annotations

import numpy as np

from tvsaddle.errors import SolverError, ValidationError

SYM_RTOL = 1e-12
MAX_CONDITION = 1e12


def as_vector(z, name="z") -> np.ndarray:
    v = np.asarray(z, dtype=float)
    if v.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} has non-finite entries")
    return v


def check_symmetric(A, name="A") -> np.ndarray:
    """Return ``A`` as a float array after checking it is square, finite and symmetric."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {A.shape}")
    if A.shape[0] == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} has non-finite entries")
    scale = max(float(np.max(np.abs(A))), np.finfo(float).tiny)
    asym = float(np.max(np.abs(A - A.T)))
    if asym > SYM_RTOL * scale:
        raise ValidationError(f"{name} is not symmetric (max |A - A^T| = {asym:.3e})")
    return A


def _off_norm(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.sqrt(np.sum(off * off)))


def jacobi_eigh(A, tol: float = 1e-15, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ``(w, V)`` with eigenvalues ``w`` sorted in descending order and
    the matching orthonormal eigenvectors as the columns of ``V``.
    """
    A = check_symmetric(A).copy()
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    total = float(np.sqrt(np.sum(A * A)))
    if n > 1 and total > 0.0:
        for _ in range(max_sweeps):
            if _off_norm(A) <= tol * total:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    if apq == 0.0:
                        continue
                    diff = A[q, q] - A[p, p]
                    if abs(apq) < 1e-18 * abs(diff):
                        # rotation angle ~ apq/diff; tau*tau would overflow
                        t = apq / diff
                    elif (tau := diff / (2.0 * apq)) >= 0:
                        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                    c = 1.0 / np.sqrt(1.0 + t * t)
                    s = t * c
                    # A <- J^T A J with J = [[c, s], [-s, c]] in the (p, q) plane
                    ap = A[:, p].copy()
                    aq = A[:, q]
                    A[:, p] = c * ap - s * aq
                    A[:, q] = s * ap + c * aq
                    ap = A[p, :].copy()
                    aq = A[q, :]
                    A[p, :] = c * ap - s * aq
                    A[q, :] = s * ap + c * aq
                    A[p, q] = A[q, p] = 0.0
                    vp = V[:, p].copy()
                    vq = V[:, q]
                    V[:, p] = c * vp - s * vq
                    V[:, q] = s * vp + c * vq
        else:
            raise SolverError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {_off_norm(A):.3e})"
            )
    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def sym_eigvals(A) -> np.ndarray:
    """All eigenvalues of symmetric ``A``, largest first."""
    return jacobi_eigh(A)[0]


def project_ball(z, center, radius: float) -> np.ndarray:
    if not radius > 0:
        raise ValidationError(f"radius must be positive, got {radius}")
    z = as_vector(z)
    center = as_vector(center, "center")
    if z.shape != center.shape:
        raise ValidationError(f"dimension mismatch: z has {z.size}, center has {center.size}")
    d = z - center
    dist = float(np.linalg.norm(d))
    if dist <= radius:
        return z.copy()
    return center + (radius / dist) * d


def project_simplex(z) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValidationError("project_simplex needs a non-empty vector")
    if not np.all(np.isfinite(z)):
        raise ValidationError("z has non-finite entries")
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, z.size + 1)
    k = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[k] / (k + 1)
    return np.maximum(z - theta, 0.0)


def solve_linear(A, b) -> np.ndarray:
    """Solve ``A x = b`` for a square nonsingular ``A``.

    Raises SolverError when the 2-norm condition number exceeds 1e12 or the
    residual check fails.
    """
    A = np.asarray(A, dtype=float)
    b = as_vector(b, "b")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"A must be square, got shape {A.shape}")
    if A.shape[0] != b.size:
        raise ValidationError(f"dimension mismatch: A is {A.shape}, b has {b.size}")
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SolverError(f"matrix is singular or near-singular (condition estimate {cond:.3e})")
    x = np.linalg.solve(A, b)
    resid = float(np.linalg.norm(A @ x - b))
    if resid > 1e-8 * max(float(np.linalg.norm(b)), np.finfo(float).tiny):
        raise SolverError(f"residual {resid:.3e} too large (condition estimate {cond:.3e})")
    return x
