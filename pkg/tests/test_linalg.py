import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tvsaddle.errors import SolverError, ValidationError
from tvsaddle.linalg import jacobi_eigh, project_ball, project_simplex, solve_linear, sym_eigvals

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_eigvals_identity():
    np.testing.assert_allclose(sym_eigvals(np.eye(3)), [1, 1, 1], atol=1e-12)


def test_eigvals_two_node_path_laplacian():
    np.testing.assert_allclose(sym_eigvals([[1, -1], [-1, 1]]), [2, 0], atol=1e-12)


def test_eigvals_ring4_matches_circulant_formula():
    L = np.array([[2, -1, 0, -1], [-1, 2, -1, 0], [0, -1, 2, -1], [-1, 0, -1, 2]], float)
    expected = sorted((2 - 2 * np.cos(2 * np.pi * k / 4) for k in range(4)), reverse=True)
    np.testing.assert_allclose(expected, [4, 2, 2, 0], atol=1e-12)
    np.testing.assert_allclose(sym_eigvals(L), expected, atol=1e-9)


def test_eigvals_agree_with_lapack(rng):
    for n in (1, 2, 5, 17, 40):
        G = rng.standard_normal((n, n))
        A = G + G.T
        np.testing.assert_allclose(sym_eigvals(A), np.linalg.eigvalsh(A)[::-1], atol=1e-9)


def test_jacobi_eigenvectors_reconstruct(rng):
    G = rng.standard_normal((8, 8))
    A = G @ G.T
    w, V = jacobi_eigh(A)
    np.testing.assert_allclose(V @ np.diag(w) @ V.T, A, atol=1e-10)
    np.testing.assert_allclose(V.T @ V, np.eye(8), atol=1e-12)


def test_eigvals_rejects_bad_input():
    with pytest.raises(ValidationError):
        sym_eigvals([[1, 2], [0, 1]])
    with pytest.raises(ValidationError):
        sym_eigvals([[np.nan, 0], [0, 1]])


@settings(max_examples=60, deadline=None)
@given(arrays(float, (6, 6), elements=finite))
def test_eigenvalue_sum_equals_trace(G):
    A = G + G.T
    w = sym_eigvals(A)
    assert abs(w.sum() - np.trace(A)) <= 1e-8 * max(1.0, np.abs(A).sum())
    assert np.all(np.diff(w) <= 0)


def test_project_ball_examples():
    np.testing.assert_array_equal(project_ball([0, 0], [0, 0], 1), [0, 0])
    np.testing.assert_allclose(project_ball([2, 0], [0, 0], 1), [1, 0])
    np.testing.assert_allclose(project_ball([3, 4], [0, 0], 1), [0.6, 0.8])
    with pytest.raises(ValidationError):
        project_ball([1, 0], [0, 0], 0)


def _grid_simplex_2d(z, step=1e-4):
    p = np.arange(0, 1 + step / 2, step)
    pts = np.stack([p, 1 - p], axis=1)
    return pts[np.argmin(np.sum((pts - z) ** 2, axis=1))]


def test_project_simplex_examples():
    np.testing.assert_array_equal(project_simplex([1, 0, 0]), [1, 0, 0])
    np.testing.assert_allclose(project_simplex([0.5, 0.5]), [0.5, 0.5])
    brute = _grid_simplex_2d(np.array([2.0, 0.0]))
    np.testing.assert_allclose(brute, [1, 0], atol=1e-4)
    np.testing.assert_allclose(project_simplex([2, 0]), brute, atol=1e-4)
    with pytest.raises(ValidationError):
        project_simplex([])


def test_project_simplex_matches_grid_search(rng):
    for _ in range(20):
        z = rng.normal(scale=2, size=2)
        np.testing.assert_allclose(project_simplex(z), _grid_simplex_2d(z), atol=1e-4)


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.integers(1, 8), elements=finite))
def test_project_simplex_feasible_and_idempotent(z):
    p = project_simplex(z)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) <= 1e-12
    np.testing.assert_allclose(project_simplex(p), p, rtol=0, atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite))
def test_projections_non_expansive(a, b):
    d = np.linalg.norm(a - b)
    assert np.linalg.norm(project_simplex(a) - project_simplex(b)) <= d + 1e-12
    c = np.zeros(4)
    assert np.linalg.norm(project_ball(a, c, 1.5) - project_ball(b, c, 1.5)) <= d + 1e-12
    pa = project_ball(a, c, 1.5)
    np.testing.assert_allclose(project_ball(pa, c, 1.5), pa, rtol=0, atol=1e-14)


def test_solve_linear_examples():
    np.testing.assert_allclose(solve_linear(np.eye(2), [3, 4]), [3, 4])
    np.testing.assert_allclose(solve_linear(2 * np.eye(2), [2, 4]), [1, 2])
    np.testing.assert_allclose(solve_linear([[2, 1], [1, 2]], [3, 3]), [1, 1])


def test_solve_linear_singular_names_condition():
    with pytest.raises(SolverError, match="condition"):
        solve_linear([[1, 1], [1, 1]], [1, 2])


def test_solve_linear_recovers_rhs(rng):
    for n in itertools.chain(range(1, 6), (20,)):
        A = rng.standard_normal((n, n)) + n * np.eye(n)
        b = rng.standard_normal(n)
        x = solve_linear(A, b)
        assert np.linalg.norm(A @ x - b) <= 1e-8 * np.linalg.norm(b)
