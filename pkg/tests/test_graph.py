import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from socialdp.errors import (
    BipartiteGraph,
    DisconnectedGraph,
    DuplicateEdge,
    GenerationFailed,
    InvalidDegree,
    InvalidNodeId,
    SelfLoop,
)
from socialdp.graph import (
    build_graph,
    generate_erdos_renyi,
    generate_random_regular,
    mh_transition,
    mixing_model,
    read_edge_list,
    spectral_gap,
    transition_matrix,
    walk_length,
    write_edge_list,
)
from socialdp import oracle

TRIANGLE = [(0, 1), (1, 2), (0, 2)]


def complete(n):
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def test_triangle():
    g = build_graph(3, TRIANGLE)
    assert g.degrees == (2, 2, 2)
    assert g.adjacency == ((1, 2), (0, 2), (0, 1))


@pytest.mark.parametrize(
    "n, edges, exc",
    [
        (4, [(0, 1), (1, 2), (2, 3), (3, 0)], BipartiteGraph),
        (4, [(0, 1), (2, 3)], DisconnectedGraph),
        (3, [(0, 1), (1, 2), (0, 2), (2, 0)], DuplicateEdge),
        (3, [(0, 1), (1, 3)], InvalidNodeId),
        (3, [(0, 0), (0, 1)], SelfLoop),
        (4, [(0, 1), (1, 2), (0, 2)], DisconnectedGraph),  # isolated node 3
        (4, [(0, 1), (0, 2), (0, 3)], BipartiteGraph),  # star
    ],
)
def test_build_graph_rejects(n, edges, exc):
    with pytest.raises(exc):
        build_graph(n, edges)


def test_erdos_renyi_complete_and_deterministic():
    assert generate_erdos_renyi(3, 1.0, seed=123).edges == [(0, 1), (0, 2), (1, 2)]
    a = generate_erdos_renyi(100, 0.1, seed=7)
    b = generate_erdos_renyi(100, 0.1, seed=7)
    assert a.edges == b.edges
    assert generate_erdos_renyi(100, 0.1, seed=8).edges != a.edges


def test_erdos_renyi_too_sparse_fails():
    with pytest.raises(GenerationFailed):
        generate_erdos_renyi(100, 0.001, seed=7)


def test_random_regular():
    k4 = generate_random_regular(4, 3, seed=1)
    assert k4.edges == complete(4).edges
    a = generate_random_regular(10, 3, seed=5)
    assert a == generate_random_regular(10, 3, seed=5)
    assert set(a.degrees) == {3}
    g = generate_random_regular(200, 8, seed=3)
    assert set(g.degrees) == {8}
    with pytest.raises(InvalidDegree):
        generate_random_regular(5, 3, seed=0)
    with pytest.raises(InvalidDegree):
        generate_random_regular(6, 2, seed=0)


def test_mh_probabilities():
    # triangle 0-1-2 with a tail 2-3: node 2 has degree 3, node 0 degree 2
    g = build_graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    tm = mh_transition(g)
    psi = transition_matrix(tm, g)
    assert psi[0, 2] == psi[2, 0] == 1 / 3
    assert psi[2, 3] == 1 / 3 and psi[3, 3] == pytest.approx(2 / 3)
    assert np.allclose(psi.sum(axis=1), 1, atol=1e-12)
    rr = generate_random_regular(20, 4, seed=2)
    tm = mh_transition(rr)
    assert np.all(tm.self_prob == 0)
    assert all(np.all(p == 0.25) for p in tm.neighbor_probs)


def test_spectral_gap_small_complete_graphs():
    # K3: eigenvalues {1, -1/2, -1/2}; K4: {1, -1/3, -1/3, -1/3}
    for n, expected in [(3, 0.5), (4, 2 / 3)]:
        g = complete(n)
        psi = oracle.dense_psi(g.adjacency)
        assert oracle.exact_gap(psi) == pytest.approx(expected, abs=1e-10)
        assert spectral_gap(mh_transition(g), g) == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("seed", range(4))
def test_spectral_gap_matches_jacobi(seed):
    g = generate_erdos_renyi(60 + 20 * seed, 0.1, seed=seed)
    gap = spectral_gap(mh_transition(g), g)
    assert 0 < gap <= 1
    assert gap == pytest.approx(oracle.exact_gap(oracle.dense_psi(g.adjacency)), abs=1e-6)


def test_walk_length():
    # ceil(1.5 * ln 512) = ceil(9.357) = 10
    assert walk_length(4, 2 / 3, 1 / 64) == 10
    assert walk_length(5, 1.0, 10.0) == 1
    assert walk_length(64, 0.5) > walk_length(32, 0.5)
    # doubling n with alpha = 1/n^3 adds about 4 ln2 / gap
    gap = 0.3
    diff = walk_length(2048, gap) - walk_length(1024, gap)
    assert abs(diff - 4 * math.log(2) / gap) <= 1


def test_mixing_model_fills_gap_and_length():
    g = complete(4)
    tm = mixing_model(g)
    assert tm.gap == pytest.approx(2 / 3, abs=1e-8)
    assert tm.alpha == 1 / 64
    assert tm.walk_length == 10
    big = mixing_model(g, dense_threshold=2)
    assert big.gap is None and big.walk_length == 4 * 2
    assert mixing_model(g, gap=0.5).walk_length == walk_length(4, 0.5)


def test_edge_list_roundtrip(tmp_path):
    g = generate_random_regular(30, 4, seed=9)
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    assert read_edge_list(path) == g
    path.write_text("# comment\n0 1\n1 2  # trailing\n\n2 0\n")
    assert read_edge_list(path).degrees == (2, 2, 2)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(10, 60), p=st.floats(0.15, 0.6), seed=st.integers(0, 2**63 - 1))
def test_transition_matrix_doubly_stochastic(n, p, seed):
    g = generate_erdos_renyi(n, p, seed)
    for u in range(g.n):
        for v in g.adjacency[u]:
            assert u in g.adjacency[v]
    psi = transition_matrix(mh_transition(g), g)
    assert np.array_equal(psi, psi.T)
    assert np.allclose(psi.sum(axis=0), 1, atol=1e-12)
    assert np.allclose(psi.sum(axis=1), 1, atol=1e-12)
    assert np.all(psi >= 0)


def test_route_follows_probabilities():
    g = build_graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    tm = mh_transition(g)
    rng = np.random.default_rng(0)
    dest = tm.route(np.full(200_000, 2), rng.random(200_000))
    freq = np.bincount(dest, minlength=4) / len(dest)
    row = transition_matrix(tm, g)[2]
    assert np.allclose(freq, row, atol=0.005)


def test_self_loop_never_negative():
    # neighbour probabilities here sum to 1 + 2.2e-16 at one node
    g = generate_erdos_renyi(27, 0.5, 28)
    psi = transition_matrix(mh_transition(g), g)
    assert np.all(psi >= 0)
    assert np.abs(psi.sum(axis=1) - 1).max() <= 1e-12
