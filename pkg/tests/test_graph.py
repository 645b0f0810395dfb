import numpy as np
import pytest

from netgrad.graph import (Graph, is_connected, laplacian, make_cycle,
                           make_from_edges, make_petersen, parse_edge_list)


def test_cycle4_basic():
    g = make_cycle(4)
    assert g.n_vertices == 4
    assert g.n_edges == 4
    assert all(g.degree(n) == 2 for n in range(4))
    assert is_connected(g)


def test_cycle3_triangle():
    g = make_cycle(3)
    assert g.n_edges == 3
    assert all(g.degree(n) == 2 for n in range(3))
    assert is_connected(g)


def test_cycle_rejects_small():
    with pytest.raises(ValueError):
        make_cycle(2)


def test_cycle4_laplacian_spectrum():
    # oracle: dense symmetric eigensolve of the 4x4 Laplacian
    vals = np.linalg.eigvalsh(laplacian(make_cycle(4)).astype(float))
    assert np.allclose(vals, [0.0, 2.0, 2.0, 4.0], atol=1e-12)


def test_petersen_shape():
    g = make_petersen()
    assert g.n_vertices == 10
    assert g.n_edges == 15
    assert all(g.degree(n) == 3 for n in range(10))
    assert is_connected(g)


def test_petersen_algebraic_connectivity():
    vals = np.linalg.eigvalsh(laplacian(make_petersen()).astype(float))
    assert abs(vals[1] - 2.0) < 1e-9


def test_from_edges_path_and_disconnected():
    assert is_connected(make_from_edges(2, [(0, 1)]))
    assert not is_connected(make_from_edges(3, [(0, 1)]))


def test_from_edges_duplicates_collapse_to_cycle():
    g = make_from_edges(4, [(0, 1), (1, 0), (1, 2), (2, 3), (3, 0)])
    assert g.adjacency == make_cycle(4).adjacency


def test_from_edges_rejects_bad_input():
    with pytest.raises(ValueError):
        make_from_edges(3, [(0, 3)])
    with pytest.raises(ValueError):
        make_from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        make_from_edges(0, [])


def test_laplacian_of_single_edge():
    L = laplacian(make_from_edges(2, [(0, 1)]))
    assert np.array_equal(L, np.array([[1, -1], [-1, 1]]))


def test_laplacian_row_sums_zero_exact():
    L = laplacian(make_petersen())
    assert L.dtype == np.int64
    assert np.array_equal(L, L.T)
    assert np.all(L.sum(axis=1) == 0)
    assert np.all(L.sum(axis=0) == 0)


def test_laplacian_kernel_contains_constants():
    vals = np.linalg.eigvalsh(laplacian(make_cycle(4)).astype(float))
    assert abs(vals[0]) < 1e-12


def _random_graph(rng) -> Graph:
    n = int(rng.integers(2, 13))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.25:
                edges.append((i, j))
    return make_from_edges(n, edges)


def test_connectivity_matches_fiedler_value_on_random_corpus():
    rng = np.random.default_rng(2024)
    for _ in range(60):
        g = _random_graph(rng)
        vals = np.linalg.eigvalsh(laplacian(g).astype(float))
        fiedler_positive = bool(vals[1] > 1e-9) if g.n_vertices > 1 else True
        assert is_connected(g) == fiedler_positive


def test_graph_invariants_on_random_corpus():
    rng = np.random.default_rng(7)
    for _ in range(40):
        g = _random_graph(rng)
        for n, nbrs in enumerate(g.adjacency):
            assert n not in nbrs
            assert list(nbrs) == sorted(set(nbrs))
            for m in nbrs:
                assert n in g.adjacency[m]


def test_consensus_map_preserves_mean():
    rng = np.random.default_rng(11)
    for _ in range(20):
        g = _random_graph(rng)
        L = laplacian(g).astype(float)
        x = rng.normal(size=(g.n_vertices, 3))
        beta = 0.3 / max(g.max_degree, 1)
        y = x - beta * (L @ x)
        assert np.allclose(y.mean(axis=0), x.mean(axis=0), atol=1e-12)


def test_parse_edge_list():
    text = """
    # a square
    4
    0 1
    1 2
    2 3  # wrap
    3 0
    """
    g = parse_edge_list(text)
    assert g.adjacency == make_cycle(4).adjacency


@pytest.mark.parametrize("bad", ["", "x", "3\n0 1 2", "2\n0 2"])
def test_parse_edge_list_rejects(bad):
    with pytest.raises(ValueError):
        parse_edge_list(bad)


def test_graph_validates_construction():
    with pytest.raises(ValueError):
        Graph(2, ((1,), ()))  # asymmetric
    with pytest.raises(ValueError):
        Graph(1, ((0,),))  # self-loop
