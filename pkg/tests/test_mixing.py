import numpy as np
import pytest

from tvsaddle.errors import ValidationError
from tvsaddle.graph import TopologySequence, make_random_connected, make_rotating_star, make_static
from tvsaddle.linalg import sym_eigvals
from tvsaddle.mixing import (
    GossipMatrix,
    chi_of,
    laplacian_matrix,
    laplacian_of,
    mixing_of,
    rho_of,
    validate_assumption4,
)


def test_laplacian_two_node_path():
    g = laplacian_of(make_static("path", 2), 0)
    np.testing.assert_array_equal(g.W, [[1, -1], [-1, 1]])
    assert g.lambda_max == pytest.approx(2, abs=1e-12)
    assert g.lambda_min_nonzero == pytest.approx(2, abs=1e-12)


def test_laplacian_complete3():
    g = laplacian_of(make_static("complete", 3), 0)
    np.testing.assert_array_equal(g.W, 3 * np.eye(3) - np.ones((3, 3)))
    assert g.lambda_max == pytest.approx(3, abs=1e-12)
    assert g.lambda_min_nonzero == pytest.approx(3, abs=1e-12)


def test_laplacian_star3_spectrum():
    g = laplacian_of(make_static("star", 3), 0)
    np.testing.assert_allclose(sym_eigvals(g.W), [3, 1, 0], atol=1e-12)


class _TwoPairs(TopologySequence):
    def edges_at(self, t):
        return ((0, 1), (2, 3))


def test_disconnected_round_rejected():
    topo = _TwoPairs(kind="custom", node_count=4)
    assert sym_eigvals(laplacian_matrix(topo.edges_at(0), 4))[-2] == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValidationError, match="disconnected"):
        laplacian_of(topo, 0)
    with pytest.raises(ValidationError, match="disconnected"):
        chi_of(topo, 1)


def test_mixing_examples():
    Wt = mixing_of(laplacian_of(make_static("path", 2), 0)).Wt
    np.testing.assert_allclose(Wt, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)
    Wt = mixing_of(laplacian_of(make_static("complete", 3), 0)).Wt
    np.testing.assert_allclose(Wt, np.full((3, 3), 1 / 3), atol=1e-15)
    with pytest.raises(ValidationError):
        mixing_of(GossipMatrix(np.zeros((2, 2)), 0.0, 0.0, 0))


@pytest.mark.parametrize(
    "topo",
    [make_static("ring", 7), make_static("star", 5), make_rotating_star(6), make_random_connected(8, 0.3, 2)],
    ids=lambda t: t.describe(),
)
def test_mixing_matrix_properties(topo):
    for t in range(12):
        g = laplacian_of(topo, t)
        Wt = mixing_of(g).Wt
        M = topo.node_count
        np.testing.assert_allclose(Wt @ np.ones(M), np.ones(M), atol=1e-10)
        np.testing.assert_allclose(Wt, Wt.T, atol=0)
        eig = sym_eigvals(Wt)
        assert eig[-1] >= -1e-10 and eig[0] <= 1 + 1e-10
        assert eig[1] == pytest.approx(1 - g.lambda_min_nonzero / g.lambda_max, abs=1e-9)


def test_chi_examples():
    assert chi_of(make_static("complete", 6), 50) == pytest.approx(1, abs=1e-9)
    assert chi_of(make_static("path", 2), 3) == pytest.approx(1, abs=1e-12)
    assert chi_of(make_rotating_star(3), 30) == pytest.approx(3, abs=1e-9)
    with pytest.raises(ValidationError):
        chi_of(make_static("ring", 4), 0)


def test_chi_ring_matches_circulant():
    M = 5
    eig = 2 - 2 * np.cos(2 * np.pi * np.arange(M) / M)
    assert chi_of(make_static("ring", M), 1) == pytest.approx(eig.max() / np.sort(eig)[1], rel=1e-12)


def test_rho_examples():
    assert rho_of(1) == 0
    assert rho_of(2) == 0.5
    assert rho_of(3) == pytest.approx(2 / 3, abs=1e-15)
    with pytest.raises(ValidationError):
        rho_of(0.5)


def test_contraction_bound(rng):
    topo = make_random_connected(7, 0.3, 5)
    rho = rho_of(chi_of(topo, 40))
    for t in range(40):
        Wt = mixing_of(laplacian_of(topo, t)).Wt
        z = rng.standard_normal((7, 3))
        z -= z.mean(axis=0)
        assert np.linalg.norm(Wt @ z) <= rho * np.linalg.norm(z) + 1e-9


def test_validator_accepts_laplacians():
    for topo in (make_static("ring", 5), make_rotating_star(4), make_random_connected(6, 0.4, 0)):
        for t in range(8):
            assert validate_assumption4(laplacian_of(topo, t), topo, t) == []


def test_validator_flags_disconnected():
    topo = make_static("complete", 4)
    L = laplacian_matrix([(0, 1), (2, 3)], 4)
    violations = validate_assumption4(L, topo, 0)
    assert any(v.startswith("kernel") for v in violations)


def test_validator_flags_sparsity():
    topo = make_static("path", 3)
    W = laplacian_matrix([(0, 1), (1, 2), (0, 2)], 3)
    violations = validate_assumption4(W, topo, 0)
    assert violations and all(v.startswith("sparsity") for v in violations)
    assert "(0, 2)" in violations[0]


def test_validator_flags_asymmetric_and_indefinite():
    topo = make_static("complete", 3)
    W = laplacian_matrix(topo.edges_at(0), 3)
    W[0, 1] += 0.1
    assert any(v.startswith("symmetric") for v in validate_assumption4(W, topo, 0))
    assert any(v.startswith("psd") for v in validate_assumption4(-laplacian_matrix(topo.edges_at(0), 3), topo, 0))
