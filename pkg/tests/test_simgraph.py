import numpy as np
import pytest

from annokit.errors import DataError
from annokit.simgraph import build_knn_graph, cosine, pairwise_cosine

from conftest import pool_from_rows, random_pool
from reference import brute_force_knn


class TestCosine:
    def test_orthogonal(self):
        assert cosine([1, 0], [0, 1]) == 0.0

    def test_scale_invariance(self):
        assert cosine([3, 0], [1, 0]) == 1.0

    def test_symmetry_over_random_pairs(self):
        rng = np.random.default_rng(123)
        for _ in range(100):
            u = rng.normal(size=5)
            v = rng.normal(size=5)
            direct = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
            assert cosine(u, v) == cosine(v, u)
            assert cosine(u, v) == pytest.approx(direct, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError, match="dimension mismatch"):
            cosine([1, 0], [1, 0, 0])

    def test_zero_vector(self):
        with pytest.raises(DataError, match="zero-norm"):
            cosine([0, 0], [1, 0])

    def test_range_clipped(self):
        assert -1.0 <= cosine([1e-8, 1], [1e-8, 1]) <= 1.0


class TestPairwiseCosine:
    def test_symmetric_unit_diagonal(self):
        pool = random_pool(20, 6, seed=7)
        sims = pairwise_cosine(pool)
        assert np.array_equal(sims, sims.T)
        assert np.all(np.diag(sims) == 1.0)
        assert sims.min() >= -1.0 and sims.max() <= 1.0


class TestBuildKnnGraph:
    def test_k_capped_at_n_minus_1(self):
        pool = pool_from_rows([[1, 0], [0, 1]])
        graph = build_knn_graph(pool, 150)
        assert graph.out_degree == 1
        assert graph.out_edges(0)[0][0] == 1
        assert graph.out_edges(1)[0][0] == 0

    def test_six_point_fixture_matches_brute_force(self, six_point_pool):
        graph = build_knn_graph(six_point_pool, 2)
        out_ref, in_ref = brute_force_knn(six_point_pool, 2)
        for v in range(len(six_point_pool)):
            assert [e[0] for e in graph.out_edges(v)] == [e[0] for e in out_ref[v]]
            assert graph.in_edges[v].tolist() == in_ref[v]

    def test_random_pools_match_brute_force(self):
        for seed in range(5):
            pool = random_pool(17, 4, seed=seed)
            graph = build_knn_graph(pool, 3)
            out_ref, _ = brute_force_knn(pool, 3)
            for v in range(17):
                assert [e[0] for e in graph.out_edges(v)] == [e[0] for e in out_ref[v]]

    def test_duplicate_embedding_tie_breaks_to_lower_index(self):
        # vertices 1 and 3 identical; 0 must pick 1
        pool = pool_from_rows([[1, 0.1], [1, 0], [0, 1], [1, 0]])
        graph = build_knn_graph(pool, 1)
        assert graph.out_edges(0)[0][0] == 1

    def test_no_self_edges_and_out_degree(self):
        pool = random_pool(12, 3, seed=9)
        graph = build_knn_graph(pool, 4)
        for v in range(12):
            neighbors = [e[0] for e in graph.out_edges(v)]
            assert v not in neighbors
            assert len(neighbors) == 4

    def test_out_edges_sorted_by_similarity_then_index(self):
        pool = random_pool(15, 3, seed=11)
        graph = build_knn_graph(pool, 5)
        for v in range(15):
            edges = graph.out_edges(v)
            sims = [s for _, s in edges]
            assert sims == sorted(sims, reverse=True)
            for (i1, s1), (i2, s2) in zip(edges, edges[1:]):
                if s1 == s2:
                    assert i1 < i2

    def test_transpose_consistency(self):
        pool = random_pool(20, 4, seed=13)
        graph = build_knn_graph(pool, 3)
        for v in range(20):
            for u, _ in graph.out_edges(v):
                assert v in graph.in_edges[u].tolist()
        count_in = sum(len(graph.in_edges[u]) for u in range(20))
        assert count_in == 20 * graph.out_degree

    def test_permutation_equivariance(self):
        pool = random_pool(14, 5, seed=17)
        perm = np.random.default_rng(3).permutation(14)
        permuted = pool.subset(perm.tolist())
        g0 = build_knn_graph(pool, 3)
        g1 = build_knn_graph(permuted, 3)
        inverse = np.empty(14, dtype=int)
        inverse[perm] = np.arange(14)
        for new_v in range(14):
            orig_v = perm[new_v]
            mapped = [perm[u] for u, _ in g1.out_edges(new_v)]
            assert mapped == [u for u, _ in g0.out_edges(orig_v)]

    def test_similarities_in_range(self):
        pool = random_pool(10, 3, seed=19)
        graph = build_knn_graph(pool, 3)
        assert np.all(graph.neighbor_sim >= -1.0)
        assert np.all(graph.neighbor_sim <= 1.0)

    def test_k_must_be_positive(self):
        pool = random_pool(5, 2, seed=21)
        with pytest.raises(DataError, match="k must be >= 1"):
            build_knn_graph(pool, 0)

    def test_json_dump_shape(self, six_point_pool):
        graph = build_knn_graph(six_point_pool, 2)
        dump = graph.to_json_dict()
        assert dump["n"] == 6
        assert len(dump["out_edges"]) == 6
