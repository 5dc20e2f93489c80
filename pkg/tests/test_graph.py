import pytest

from tvsaddle.errors import ValidationError
from tvsaddle.graph import (
    is_connected,
    make_random_connected,
    make_rotating_star,
    make_static,
    parse_topology,
)


def test_static_examples():
    assert make_static("path", 2).edges_at(0) == ((0, 1),)
    ring = make_static("ring", 4)
    assert all(set(ring.edges_at(t)) == {(0, 1), (1, 2), (2, 3), (0, 3)} for t in range(10))
    assert set(make_static("complete", 3).edges_at(5)) == {(0, 1), (0, 2), (1, 2)}
    assert set(make_static("star", 4).edges_at(0)) == {(0, 1), (0, 2), (0, 3)}


@pytest.mark.parametrize("kind,M", [("ring", 2), ("path", 1), ("star", 1), ("complete", 1)])
def test_static_too_small(kind, M):
    with pytest.raises(ValidationError):
        make_static(kind, M)


def test_rotating_star_examples():
    s = make_rotating_star(3, 1)
    assert set(s.edges_at(0)) == {(0, 1), (0, 2)}
    assert set(s.edges_at(1)) == {(0, 1), (1, 2)}
    assert make_rotating_star(3, 2).center_at(2) == 1
    with pytest.raises(ValidationError):
        make_rotating_star(1)


@pytest.mark.parametrize("M,period", [(3, 1), (4, 2), (7, 3)])
def test_rotating_star_periodicity(M, period):
    s = make_rotating_star(M, period)
    for t in range(3 * M * period):
        assert s.center_at(t) == s.center_at(t + period * M)
        assert s.edges_at(t) == s.edges_at(t + period * M)


def test_random_examples():
    assert all(make_random_connected(2, 1.0, s).edges_at(t) == ((0, 1),) for s in range(3) for t in range(5))
    g = make_random_connected(5, 0.5, 42)
    assert g.edges_at(3) == g.edges_at(3)
    assert make_random_connected(5, 0.5, 42).edges_at(3) == g.edges_at(3)
    sparse = make_random_connected(4, 0.01, 7)
    for t in range(50):
        edges = sparse.edges_at(t)
        assert len(edges) >= 3 and is_connected(edges, 4)
    with pytest.raises(ValidationError):
        make_random_connected(4, 0.0, 1)
    with pytest.raises(ValidationError):
        make_random_connected(4, 1.5, 1)


def test_random_changes_over_time():
    g = make_random_connected(8, 0.3, 1)
    assert len({g.edges_at(t) for t in range(20)}) > 1


@pytest.mark.parametrize(
    "topo",
    [
        make_static("ring", 6),
        make_static("path", 5),
        make_static("complete", 4),
        make_static("star", 5),
        make_rotating_star(6, 2),
        make_random_connected(9, 0.2, 3),
        make_random_connected(6, 0.05, 11),
    ],
    ids=lambda t: t.describe(),
)
def test_every_generator_connected(topo):
    M = topo.node_count
    for t in range(10 * M + 1):
        edges = topo.edges_at(t)
        assert is_connected(edges, M)
        assert all(i < j for i, j in edges)


def test_is_connected_examples():
    assert not is_connected([], 2)
    assert is_connected([(0, 1)], 2)
    assert not is_connected([(0, 1), (2, 3)], 4)
    with pytest.raises(ValidationError):
        is_connected([(0, 5)], 3)


def test_parse_topology():
    assert parse_topology("ring", 5) == make_static("ring", 5)
    assert parse_topology("rotating_star:period=3", 4) == make_rotating_star(4, 3)
    assert parse_topology("random:p=0.3,seed=9", 6) == make_random_connected(6, 0.3, 9)
    for bad in ("torus", "ring:p=1", "random:q=2", "rotating_star:period=x"):
        with pytest.raises(ValidationError):
            parse_topology(bad, 5)
    with pytest.raises(ValidationError, match="requires M"):
        parse_topology("ring", None)
