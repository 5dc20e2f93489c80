import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvsaddle.errors import ValidationError
from tvsaddle.gossip import NodeStates, gossip, gossip_round, rounds_for_accuracy
from tvsaddle.graph import make_random_connected, make_rotating_star, make_static
from tvsaddle.metrics import consensus_error
from tvsaddle.mixing import chi_of, rho_of


def _frob_dev(rows):
    return np.linalg.norm(rows - rows.mean(axis=0))


def test_round_two_node_path():
    out = gossip_round(NodeStates([[0.0], [2.0]]), make_static("path", 2))
    np.testing.assert_allclose(out.rows, [[1.0], [1.0]], atol=1e-15)
    assert out.round_cursor == 1


def test_round_complete_exact_average(rng):
    rows = rng.standard_normal((3, 4))
    out = gossip_round(NodeStates(rows), make_static("complete", 3))
    np.testing.assert_allclose(out.rows, np.tile(rows.mean(axis=0), (3, 1)), atol=1e-14)


def test_consensus_is_fixed_point():
    rows = np.tile([1.5, -2.0], (5, 1))
    out = gossip(NodeStates(rows), make_rotating_star(5), 7)
    np.testing.assert_allclose(out.rows, rows, atol=1e-14)


def test_dimension_mismatch():
    with pytest.raises(ValidationError):
        gossip_round(NodeStates(np.zeros((3, 2))), make_static("ring", 4))
    with pytest.raises(ValidationError):
        gossip(NodeStates(np.zeros((4, 2))), make_static("ring", 4), -1)


def test_H_zero_is_one_multiplication(rng):
    topo = make_static("ring", 5)
    s = NodeStates(rng.standard_normal((5, 2)), 3)
    np.testing.assert_allclose(gossip(s, topo, 0).rows, gossip_round(s, topo).rows, atol=1e-15)
    assert gossip(s, topo, 0).round_cursor == 4


@pytest.mark.parametrize(
    "topo",
    [make_rotating_star(4, 2), make_static("ring", 4), make_random_connected(4, 0.4, 8)],
    ids=lambda t: t.describe(),
)
def test_cached_window_matches_sequential_rounds(topo, rng):
    s = NodeStates(rng.standard_normal((4, 3)), 5)
    seq = s
    for _ in range(12):
        seq = gossip_round(seq, topo)
    fast = gossip(s, topo, 11)
    np.testing.assert_allclose(fast.rows, seq.rows, atol=1e-13)
    assert fast.round_cursor == seq.round_cursor == 17


def test_rotating_star_contraction_over_H(rng):
    topo = make_rotating_star(3)
    rows = rng.standard_normal((3, 4))
    out = gossip(NodeStates(rows), topo, 20)
    assert _frob_dev(out.rows) <= (2 / 3) ** 21 * _frob_dev(rows) + 1e-9


@settings(max_examples=50, deadline=None)
@given(
    st.integers(2, 9),
    st.integers(0, 15),
    st.integers(0, 1000),
    st.integers(0, 40),
)
def test_mean_preserved_and_consensus_contracts(M, H, seed, cursor):
    topo = make_random_connected(M, 0.35, seed)
    rows = np.random.default_rng(seed).standard_normal((M, 3))
    s = NodeStates(rows, cursor)
    out = gossip(s, topo, H)
    np.testing.assert_allclose(out.mean(), s.mean(), atol=1e-10)
    assert out.round_cursor == cursor + H + 1
    rho = rho_of(chi_of(topo, cursor + H + 1))
    assert consensus_error(out) <= rho ** (2 * (H + 1)) * consensus_error(s) + 1e-9


def test_rounds_for_accuracy_examples():
    assert rounds_for_accuracy(1, 1e-3) == 1
    assert rounds_for_accuracy(2, 0.25) == 2
    n = rounds_for_accuracy(3, 1e-6)
    assert n == math.ceil(math.log(1e-6) / math.log(2 / 3)) == 35
    assert (2 / 3) ** 35 <= 1e-6 < (2 / 3) ** 34
    with pytest.raises(ValidationError):
        rounds_for_accuracy(3, 0)
    with pytest.raises(ValidationError):
        rounds_for_accuracy(0.5, 0.1)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0001, 500), st.floats(1e-12, 0.99))
def test_rounds_for_accuracy_is_minimal(chi, target):
    n = rounds_for_accuracy(chi, target)
    rho = 1 - 1 / chi
    assert rho**n <= target
    assert n == 1 or rho ** (n - 1) > target
