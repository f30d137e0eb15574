import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delaypatch.graph import (UNREACHABLE, ConvergenceError, Graph, GraphError, SbmSpec,
                              degrees, eigenvector_centrality, generate_sbm, load_edgelist,
                              multi_source_bfs, sample_sbm, write_edgelist)

from conftest import barbell, complete_graph, cycle_graph, path_graph, random_connected, star_graph


def edge_set(g):
    return {tuple(e) for e in g.edges.tolist()}


def assert_well_formed(g):
    a = g.adjacency
    assert (a != a.T).nnz == 0
    assert np.all(a.diagonal() == 0)
    assert a.nnz == 2 * g.m
    for i, j in g.edges:
        assert a[i, j] == 1 and a[j, i] == 1


class TestLoadEdgelist:
    def test_simple(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("0 1\n1 2")
        g = load_edgelist(f)
        assert g.n == 3
        assert edge_set(g) == {(0, 1), (1, 2)}

    def test_relabel_and_dedup(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("# c\n5 7\n7 5")
        g = load_edgelist(f)
        assert g.n == 2
        assert edge_set(g) == {(0, 1)}

    def test_first_appearance_order_and_self_loops(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("10 3\n3 3\n\n3\t42\n")
        g = load_edgelist(f)
        assert g.n == 3
        assert edge_set(g) == {(0, 1), (1, 2)}

    def test_bad_token_reports_line(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("0 1\n# fine\n1 x\n")
        with pytest.raises(GraphError, match=":3:"):
            load_edgelist(f)

    def test_missing_file(self, tmp_path):
        with pytest.raises(GraphError):
            load_edgelist(tmp_path / "nope.txt")

    def test_empty_edges(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("# only a comment\n4 4\n")
        with pytest.raises(GraphError, match="no edges"):
            load_edgelist(f)

    def test_roundtrip(self, tmp_path, rng):
        g = random_connected(30, 4, rng)
        write_edgelist(g, tmp_path / "out.txt")
        h = load_edgelist(tmp_path / "out.txt")
        assert h.m == g.m
        assert_well_formed(h)


class TestSbm:
    def test_probabilities_hit_mean_degree(self):
        spec = SbmSpec(n=1000, k=4, avg_degree=8, in_out_ratio=10)
        p_in, p_out = spec.edge_probabilities()
        s = spec.block_sizes()
        expected = np.sum(s * ((s - 1) * p_in + (spec.n - s) * p_out)) / spec.n
        assert expected == pytest.approx(8.0)
        assert p_out == pytest.approx(p_in / 10)

    def test_block_sizes_near_equal(self):
        assert SbmSpec(n=10, k=3).block_sizes().tolist() == [4, 3, 3]

    def test_erdos_renyi_mean_degree(self):
        means = []
        for seed in range(20):
            g, _ = sample_sbm(SbmSpec(n=1000, k=1, avg_degree=8, in_out_ratio=10, seed=seed))
            means.append(2 * g.m / g.n)
        assert abs(np.mean(means) - 8) <= 0.5

    def test_planted_partition_is_modular(self):
        g, labels = sample_sbm(SbmSpec(n=2000, k=4, avg_degree=8, in_out_ratio=10, seed=3))

        def modularity(lab):
            # Newman modularity, computed directly from edge and degree sums
            deg = degrees(g).astype(float)
            two_m = 2.0 * g.m
            same = lab[g.edges[:, 0]] == lab[g.edges[:, 1]]
            intra = same.sum() / g.m
            tot = np.bincount(lab, weights=deg)
            return intra - np.sum((tot / two_m) ** 2)

        random_split = np.random.default_rng(0).integers(0, 2, size=g.n)
        assert modularity(labels) > modularity(random_split) + 0.3

    def test_limiting_two_cliques(self):
        g = generate_sbm(SbmSpec(n=4, k=2, avg_degree=1, in_out_ratio=1e9, seed=1),
                         largest_component=False)
        assert edge_set(g) == {(0, 1), (2, 3)}

    def test_infeasible(self):
        with pytest.raises(GraphError, match="p_in"):
            SbmSpec(n=4, k=2, avg_degree=3, in_out_ratio=1e9).edge_probabilities()

    @pytest.mark.parametrize("kwargs", [dict(n=3, k=4), dict(n=10, k=0), dict(n=10, k=2, avg_degree=0),
                                        dict(n=10, k=2, in_out_ratio=1.0)])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(GraphError):
            SbmSpec(**kwargs)

    def test_reproducible(self):
        spec = SbmSpec(n=500, k=3, seed=11)
        a, b = generate_sbm(spec), generate_sbm(spec)
        assert a.n == b.n and np.array_equal(a.edges, b.edges)

    def test_largest_component_connected(self):
        g = generate_sbm(SbmSpec(n=300, k=3, avg_degree=2, seed=5))
        assert g.is_connected()
        assert g.n < 300
        assert_well_formed(g)


class TestBfs:
    def test_path(self):
        assert multi_source_bfs(path_graph(3), {0}).tolist() == [0, 1, 2]

    def test_two_sources(self):
        assert multi_source_bfs(path_graph(3), {0, 2}).tolist() == [0, 1, 0]

    def test_unreachable(self):
        g = Graph.from_edges(3, [(0, 1)])
        assert multi_source_bfs(g, {0}).tolist() == [0, 1, UNREACHABLE]

    def test_empty_sources(self):
        with pytest.raises(GraphError):
            multi_source_bfs(path_graph(3), set())

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), k=st.integers(1, 4))
    def test_edge_lipschitz(self, seed, k):
        rng = np.random.default_rng(seed)
        g = Graph.from_edges(40, np.argwhere(np.triu(rng.random((40, 40)) < 0.06, 1)))
        d = multi_source_bfs(g, rng.choice(40, size=k, replace=False))
        for i, j in g.edges:
            if d[i] != UNREACHABLE and d[j] != UNREACHABLE:
                assert abs(d[i] - d[j]) <= 1
            else:
                assert d[i] == d[j] == UNREACHABLE


class TestCentrality:
    def test_star_center(self):
        assert np.argmax(eigenvector_centrality(star_graph(4))) == 0

    def test_cycle_uniform(self):
        v = eigenvector_centrality(cycle_graph(5))
        assert np.ptp(v) < 1e-9

    def test_path_against_dense(self):
        g = path_graph(3)
        w, q = np.linalg.eigh(g.adjacency.toarray())
        dense = np.abs(q[:, -1])
        v = eigenvector_centrality(g)
        np.testing.assert_allclose(v, dense, atol=1e-8)
        np.testing.assert_allclose(v, np.array([1, np.sqrt(2), 1]) / 2, atol=1e-8)

    def test_unit_norm_nonnegative_and_residual(self, rng):
        tol = 1e-10
        for _ in range(5):
            g = random_connected(60, 5, rng)
            v = eigenvector_centrality(g, tol=tol)
            assert np.linalg.norm(v) == pytest.approx(1.0)
            assert np.all(v >= 0)
            a = g.adjacency
            lam = v @ (a @ v)
            row_norm = np.max(np.asarray(a.sum(axis=1)))
            assert np.linalg.norm(a @ v - lam * v) <= 10 * tol * row_norm

    def test_barbell_ranks_clique_first(self):
        g = barbell()
        v = eigenvector_centrality(g)
        w, q = np.linalg.eigh(g.adjacency.toarray())
        dense = np.abs(q[:, -1])
        np.testing.assert_allclose(v, dense, atol=1e-8)
        top = int(np.argmax(v))
        assert top not in range(5, 8)
        assert dense[top] == pytest.approx(dense.max())

    def test_iteration_cap(self):
        with pytest.raises(ConvergenceError):
            eigenvector_centrality(path_graph(50), tol=1e-16, max_iter=5)


def test_degrees():
    assert degrees(star_graph(4)).tolist() == [4, 1, 1, 1, 1]
    assert degrees(cycle_graph(5)).tolist() == [2] * 5
    assert degrees(complete_graph(2)).tolist() == [1, 1]


def test_from_edges_normalizes():
    g = Graph.from_edges(4, [(1, 0), (0, 1), (2, 2), (3, 2)])
    assert edge_set(g) == {(0, 1), (2, 3)}
    assert_well_formed(g)
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 5)])
