import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctmpfit.graph import (Graph, GraphError, generate_complete, generate_er, generate_path,
                           generate_star, generate_ws, ieee118, load_edgelist, write_edgelist)


def assert_simple(g):
    for i in range(g.n):
        assert i not in g.neighbors(i)
        for j in g.neighbors(i):
            assert i in g.neighbors(j)
        assert g.degree(i) == len(g.neighbors(i))
    assert g.max_degree <= g.n - 1
    A = g.adjacency_matrix()
    assert np.array_equal(A, A.T) and not A.diagonal().any()


def test_er_p_one_two_nodes():
    g = generate_er(2, 1.0, seed=123)
    assert g.edges == ((0, 1),)


def test_er_p_zero_is_empty():
    g = generate_er(5, 0.0, seed=1)
    assert g.num_edges == 0 and g.max_degree == 0


def test_er_replays_seeded_draws():
    # lexicographic pair order, one uniform per pair
    draws = np.random.default_rng(7).random(16 * 15 // 2)
    expected = int((draws < 0.4).sum())
    g = generate_er(16, 0.4, seed=7)
    assert g.num_edges == expected
    assert generate_er(16, 0.4, seed=7) == g


def test_er_connected_resamples():
    g = generate_er(30, 0.12, seed=5, require_connected=True)
    assert g.is_connected()
    with pytest.raises(GraphError):
        generate_er(10, 0.0, seed=1, require_connected=True, max_tries=5)


def test_ws_no_rewire_is_ring():
    g = generate_ws(6, 1, 0.0, seed=0)
    assert g.num_edges == 6 and set(g.degrees) == {2}
    g = generate_ws(8, 2, 0.0, seed=0)
    assert set(g.degrees) == {4}


def test_ws_preserves_edge_count():
    g = generate_ws(10, 2, 0.5, seed=3)
    assert g.num_edges == 20
    assert generate_ws(10, 2, 0.5, seed=3) == g


def test_ws_rejects_bad_nei():
    with pytest.raises(GraphError):
        generate_ws(6, 3, 0.1)
    with pytest.raises(GraphError):
        generate_ws(6, 0, 0.1)


@pytest.mark.parametrize("n,edges", [(1, 0), (3, 3), (10, 45)])
def test_complete(n, edges):
    g = generate_complete(n)
    assert g.num_edges == edges
    assert g.max_degree == n - 1


def test_path_and_star():
    assert generate_path(4).edges == ((0, 1), (1, 2), (2, 3))
    assert generate_star(4).degree(0) == 3


def test_load_edgelist(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("# comment\n3\n0 1\n1 2  # trailing\n")
    g = load_edgelist(f)
    assert g == generate_path(3)


@pytest.mark.parametrize("text,msg", [
    ("2\n0 0\n", "self-loop"),
    ("3\n0 1\n1 0\n", "duplicate"),
    ("3\n0 5\n", "out of range"),
    ("3\n0 x\n", "integers"),
    ("# nothing\n", "missing node count"),
])
def test_load_edgelist_errors(tmp_path, text, msg):
    f = tmp_path / "bad.txt"
    f.write_text(text)
    with pytest.raises(GraphError, match=msg):
        load_edgelist(f)


def test_edgelist_roundtrip(tmp_path):
    g = generate_ws(12, 2, 0.3, seed=9)
    write_edgelist(g, tmp_path / "g.txt", comment="ws")
    assert load_edgelist(tmp_path / "g.txt") == g


def test_ieee118_topology():
    g = ieee118()
    assert g.n == 118
    assert g.num_edges == 179
    assert g.max_degree == 9
    assert g.is_connected()


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 25), p=st.floats(0, 1), seed=st.integers(0, 2**32))
def test_er_is_simple(n, p, seed):
    assert_simple(generate_er(n, p, seed=seed))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 25), data=st.data(), p=st.floats(0, 1), seed=st.integers(0, 2**32))
def test_ws_is_simple_and_keeps_edges(n, data, p, seed):
    nei = data.draw(st.integers(1, (n - 1) // 2))
    g = generate_ws(n, nei, p, seed=seed)
    assert_simple(g)
    assert g.num_edges == n * nei
    assert generate_ws(n, nei, p, seed=seed) == g
