import numpy as np
import pytest

from annokit.datamodel import SelectionConfig, load_pool, save_pool_jsonl
from annokit.errors import ConfigError, DataError
from annokit.metrics import (
    cluster_coverage,
    compute_metrics,
    div_f,
    div_i,
    make_clustered_pool,
    repr_score,
    run_trials,
    write_sweep_csv,
)

from conftest import pool_from_rows, random_pool


class TestDivF:
    def test_identical_embeddings_zero(self):
        pool = pool_from_rows([[1, 0], [2, 0]])  # same direction
        assert div_f(["p0", "p1"], pool) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_pair_one(self):
        pool = pool_from_rows([[1, 0], [0, 1]])
        assert div_f(["p0", "p1"], pool) == pytest.approx(1.0, abs=1e-12)

    def test_matches_double_loop_reference(self):
        pool = random_pool(10, 5, seed=3)
        ids = pool.ids
        value = div_f(ids, pool)
        total, pairs = 0.0, 0
        for i in range(10):
            for j in range(i + 1, 10):
                total += float(np.dot(pool.matrix[i], pool.matrix[j]))
                pairs += 1
        assert value == pytest.approx(1.0 - total / pairs, abs=1e-9)

    def test_needs_two(self):
        pool = random_pool(3, 2, seed=5)
        with pytest.raises(DataError, match="at least 2"):
            div_f([pool.ids[0]], pool)

    def test_range(self):
        pool = pool_from_rows([[1, 0], [-1, 0]])  # antipodal
        assert div_f(["p0", "p1"], pool) == pytest.approx(2.0, abs=1e-12)


class TestRepr:
    def test_whole_pool_selected_is_one(self):
        pool = random_pool(8, 3, seed=7)
        assert repr_score(pool.ids, pool) == pytest.approx(1.0, abs=1e-12)

    def test_single_point_equal_to_all_is_one(self):
        pool = pool_from_rows([[1, 0], [2, 0], [3, 0]])
        assert repr_score(["p1"], pool) == pytest.approx(1.0, abs=1e-12)

    def test_balanced_cover_beats_one_sided(self, two_cluster_pool):
        pool = two_cluster_pool
        balanced = repr_score([pool.ids[0], pool.ids[5]], pool)
        lopsided = repr_score([pool.ids[0], pool.ids[1]], pool)
        assert balanced > lopsided

    def test_matches_double_loop_reference(self):
        pool = random_pool(12, 4, seed=9)
        selected = pool.ids[:4]
        value = repr_score(selected, pool)
        acc = 0.0
        for i in range(12):
            acc += max(float(np.dot(pool.matrix[i], pool.matrix[j])) for j in range(4))
        assert value == pytest.approx(acc / 12, abs=1e-9)

    def test_monotone_in_selection(self):
        pool = random_pool(15, 4, seed=11)
        previous = repr_score(pool.ids[:1], pool)
        for size in range(2, 8):
            current = repr_score(pool.ids[:size], pool)
            assert current >= previous - 1e-12
            previous = current

    def test_needs_one(self):
        pool = random_pool(3, 2, seed=13)
        with pytest.raises(DataError, match="at least 1"):
            repr_score([], pool)


class TestDivI:
    def test_identical_texts_zero(self):
        pool = pool_from_rows([[1, 0], [0, 1]], texts=["a b c", "a b c"])
        assert div_i(["p0", "p1"], pool) == 0.0

    def test_disjoint_vocabulary_one(self):
        pool = pool_from_rows([[1, 0], [0, 1]], texts=["a b", "c d"])
        assert div_i(["p0", "p1"], pool) == 1.0

    def test_five_text_fixture_hand_computed(self):
        texts = ["a b c", "a b c", "a b", "d e", "c d"]
        pool = pool_from_rows(np.eye(5), texts=texts)
        # pairwise Jaccard sum = 1 + 2/3 + 0 + 1/4 + 2/3 + 0 + 1/4 + 0 + 0 + 1/3
        expected = 1.0 - (19.0 / 6.0) / 10.0
        assert div_i(pool.ids, pool) == pytest.approx(expected, abs=1e-12)

    def test_missing_text_rejected(self):
        pool = pool_from_rows([[1, 0], [0, 1]])
        with pytest.raises(DataError, match="has none"):
            div_i(["p0", "p1"], pool)


class TestClusterCoverage:
    def test_counts_covered_and_total(self):
        pool = pool_from_rows(np.eye(4), clusters=[0, 0, 1, 2])
        assert cluster_coverage(["p0", "p1"], pool) == (1, 3)
        assert cluster_coverage(["p0", "p2", "p3"], pool) == (3, 3)

    def test_missing_field_rejected(self):
        pool = pool_from_rows([[1, 0]])
        with pytest.raises(DataError, match="no 'cluster' field"):
            cluster_coverage(["p0"], pool)


class TestScaleInvariance:
    def test_metrics_unchanged_by_positive_rescale(self):
        rng = np.random.default_rng(17)
        rows = rng.normal(size=(12, 4))
        texts = [f"token{i} shared" for i in range(12)]
        pool = pool_from_rows(rows, texts=texts)
        scaled = pool_from_rows(rows * 123.0, texts=texts)
        ids = pool.ids[:5]
        assert div_f(ids, pool) == pytest.approx(div_f(ids, scaled), abs=1e-12)
        assert repr_score(ids, pool) == pytest.approx(repr_score(ids, scaled), abs=1e-12)
        assert div_i(ids, pool) == div_i(ids, scaled)


class TestComputeMetrics:
    def test_selected_metrics_only(self):
        pool = make_clustered_pool(2, 10, 4, seed=1)
        ids = pool.ids[:4]
        report = compute_metrics(ids, pool, ("div_f", "repr", "div_i", "cluster_coverage"))
        data = report.to_json_dict()
        assert set(data) == {"div_f", "repr", "div_i", "cluster_coverage"}
        assert 0.0 <= data["div_f"] <= 2.0
        assert -1.0 <= data["repr"] <= 1.0

    def test_unknown_metric(self):
        pool = random_pool(5, 2, seed=19)
        with pytest.raises(ConfigError, match="unknown metric"):
            compute_metrics(pool.ids[:2], pool, ("accuracy",))


class TestRunTrials:
    def test_three_trial_records_and_ordering(self):
        pool = make_clustered_pool(3, 40, 6, seed=5)
        config = SelectionConfig(method="random", budget=10, seed=3)
        summary = run_trials(pool, config, trials=3, subsample_n=60, base_seed=11)
        assert len(summary.reports) == 3
        assert summary.trial_seeds == (11, 12, 13)
        for stats in summary.stats().values():
            assert stats["min"] <= stats["mean"] <= stats["max"]

    def test_zero_variance_with_full_subsample_and_deterministic_selector(self):
        pool = make_clustered_pool(2, 30, 4, seed=7)
        config = SelectionConfig(method="fast_vote_k", budget=8, k=10)
        summary = run_trials(pool, config, trials=3, subsample_n=len(pool), base_seed=0)
        for stats in summary.stats().values():
            assert stats["min"] == stats["mean"] == stats["max"]

    def test_deterministic_for_fixed_base_seed(self):
        pool = make_clustered_pool(3, 30, 4, seed=9)
        config = SelectionConfig(method="diversity", budget=6, seed=2)
        a = run_trials(pool, config, trials=3, subsample_n=50, base_seed=4)
        b = run_trials(pool, config, trials=3, subsample_n=50, base_seed=4)
        assert a.to_json_dict() == b.to_json_dict()

    def test_vote_k_coverage_dominates_random_on_cluster_fixture(self):
        pool = make_clustered_pool(5, 60, 8, seed=13)
        kwargs = dict(trials=3, subsample_n=150, base_seed=21,
                      metrics=("cluster_coverage",))
        vote = run_trials(
            pool, SelectionConfig(method="vote_k", budget=10, k=20), **kwargs
        )
        rand = run_trials(
            pool, SelectionConfig(method="random", budget=10, seed=77), **kwargs
        )
        vote_min = vote.stats()["cluster_coverage"]["min"]
        rand_mean = rand.stats()["cluster_coverage"]["mean"]
        assert vote_min >= rand_mean

    def test_subsample_n_validated(self):
        pool = random_pool(10, 3, seed=23)
        config = SelectionConfig(method="random", budget=2, seed=0)
        with pytest.raises(DataError, match="exceeds pool size"):
            run_trials(pool, config, trials=1, subsample_n=11)


class TestSyntheticPool:
    def test_shape_and_cluster_fields(self):
        pool = make_clustered_pool(clusters=2, per_cluster=50, dim=8, seed=3)
        assert len(pool) == 100
        assert pool.dim == 8
        clusters = {inst.extras["cluster"] for inst in pool.instances}
        assert clusters == {0, 1}
        assert pool.instances[0].label == "cluster-0"

    def test_deterministic(self):
        a = make_clustered_pool(3, 10, 4, seed=5)
        b = make_clustered_pool(3, 10, 4, seed=5)
        assert a.ids == b.ids
        assert np.array_equal(a.matrix, b.matrix)

    def test_round_trips_through_jsonl(self, tmp_path):
        pool = make_clustered_pool(2, 5, 3, seed=7)
        path = tmp_path / "synth.jsonl"
        save_pool_jsonl(pool, path)
        again = load_pool(path)
        assert again.ids == pool.ids
        assert again["g1-0"].extras["cluster"] == 1

    def test_parameter_validation(self):
        with pytest.raises(ConfigError):
            make_clustered_pool(0, 5, 3, seed=1)


class TestSweepCsv:
    def test_header_and_rows(self, tmp_path):
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, [(18, "vote_k", "repr", 0.5, 0.4, 0.6)])
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "budget,method,metric,mean,min,max"
        assert lines[1].startswith("18,vote_k,repr,")
