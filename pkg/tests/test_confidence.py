import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from annokit.confidence import (
    Demonstration,
    FileScorer,
    MockScorer,
    RemoteScorer,
    load_confidence_table,
    mean_logprob,
    save_confidence_table,
    score_pool,
)
from annokit.errors import (
    DataError,
    EmptyGenerationError,
    MalformedResponseError,
    MissingScoreError,
    ScorerError,
    TransportError,
)

from conftest import pool_from_rows, random_pool


class StubLM:
    """Tiny in-process HTTP endpoint speaking the completion wire format."""

    def __init__(self):
        self.status = 200
        self.body = {"text": "ok", "token_logprobs": [-1.0, -3.0]}
        self.raw_body = None
        self.requests = []

    def start(self):
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                stub.requests.append({
                    "headers": dict(self.headers),
                    "body": json.loads(self.rfile.read(length) or b"{}"),
                })
                payload = (stub.raw_body if stub.raw_body is not None
                           else json.dumps(stub.body).encode())
                self.send_response(stub.status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_port}/v1/complete"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()
        return self

    def stop(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub_lm():
    stub = StubLM().start()
    yield stub
    stub.stop()


class TestMeanLogprob:
    def test_two_token_mean(self):
        assert mean_logprob([-1.0, -3.0]) == -2.0

    def test_empty_generation_errors(self):
        with pytest.raises(EmptyGenerationError, match="empty generation"):
            mean_logprob([])

    def test_matches_reference_within_1e12(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            logprobs = (-rng.exponential(2.0, size=rng.integers(1, 40))).tolist()
            reference = sum(logprobs) / len(logprobs)
            assert abs(mean_logprob(logprobs) - reference) <= 1e-12


class TestMockScorer:
    def test_query_identical_to_demo_source_scores_zero(self):
        pool = pool_from_rows([[1, 0], [0, 1], [1, 1]])
        scorer = MockScorer(pool)
        demo = Demonstration("in", "out", source_id="p0")
        assert scorer.score([demo], pool.instances[0]) == 0.0

    def test_orthogonal_demo_scores_minus_one(self):
        pool = pool_from_rows([[1, 0], [0, 1]])
        scorer = MockScorer(pool)
        demo = Demonstration("in", "out", source_id="p1")
        assert scorer.score([demo], pool.instances[0]) == -1.0

    def test_no_demonstrations_accepted(self):
        pool = pool_from_rows([[1, 0]])
        assert MockScorer(pool).score([], pool.instances[0]) == -1.0

    def test_bit_identical_across_calls(self):
        pool = random_pool(10, 4, seed=3)
        scorer = MockScorer(pool)
        demos = [Demonstration("in", "out", source_id=i) for i in pool.ids[:3]]
        values = {scorer.score(demos, q) for q in pool.instances for _ in range(3)}
        assert len(values) == len({scorer.score(demos, q) for q in pool.instances})

    def test_missing_source_id_rejected(self):
        pool = pool_from_rows([[1, 0]])
        with pytest.raises(ScorerError, match="source ids"):
            MockScorer(pool).score([Demonstration("in", "out")], pool.instances[0])


class TestDemonstration:
    def test_rejects_empty_fields(self):
        with pytest.raises(DataError):
            Demonstration("", "out")
        with pytest.raises(DataError):
            Demonstration("in", "")


class TestFileScorer:
    def test_passthrough(self, tmp_path):
        pool = pool_from_rows([[1, 0], [0, 1]])
        path = tmp_path / "scores.json"
        save_confidence_table({"p0": -0.25, "p1": -1.5}, path)
        scorer = FileScorer.from_file(path)
        table = score_pool(scorer, [], pool.instances)
        assert table == {"p0": -0.25, "p1": -1.5}

    def test_missing_id_names_it(self):
        pool = pool_from_rows([[1, 0], [0, 1]])
        scorer = FileScorer({"p0": -0.5})
        with pytest.raises(MissingScoreError, match="'p1'"):
            score_pool(scorer, [], pool.instances)


class TestScorePool:
    def test_synthetic_3000_all_finite(self):
        pool = random_pool(3000, 8, seed=11)
        scorer = MockScorer(pool)
        demos = [Demonstration("in", "out", source_id=i) for i in pool.ids[:5]]
        table = score_pool(scorer, demos, pool.instances)
        assert len(table) == 3000
        assert all(math.isfinite(v) for v in table.values())

    def test_permutation_invariant_as_map(self):
        pool = random_pool(40, 4, seed=13)
        scorer = MockScorer(pool)
        demos = [Demonstration("in", "out", source_id=i) for i in pool.ids[:4]]
        forward = score_pool(scorer, demos, pool.instances)
        backward = score_pool(scorer, demos, list(reversed(pool.instances)))
        assert forward == backward

    def test_worker_count_does_not_change_result(self):
        pool = random_pool(50, 4, seed=17)
        scorer = MockScorer(pool)
        demos = [Demonstration("in", "out", source_id=i) for i in pool.ids[:3]]
        assert (score_pool(scorer, demos, pool.instances, max_workers=1)
                == score_pool(scorer, demos, pool.instances, max_workers=8))

    def test_failure_names_instance(self):
        pool = pool_from_rows([[1, 0], [0, 1]])
        scorer = FileScorer({"p0": -0.5})
        with pytest.raises(MissingScoreError, match="instance 'p1'"):
            score_pool(scorer, [], pool.instances)


class TestRemoteScorer:
    def make_query(self):
        pool = pool_from_rows([[1, 0]], texts=["what is up"], labels=["nothing"])
        return pool.instances[0]

    def test_mean_of_returned_logprobs(self, stub_lm):
        scorer = RemoteScorer(url=stub_lm.url)
        assert scorer.score([], self.make_query()) == -2.0

    def test_request_body_follows_wire_format(self, stub_lm):
        scorer = RemoteScorer(url=stub_lm.url, max_tokens=32)
        demos = [Demonstration("q1", "a1")]
        scorer.score(demos, self.make_query())
        body = stub_lm.requests[-1]["body"]
        assert set(body) == {"prompt", "max_tokens", "temperature"}
        assert body["max_tokens"] == 32
        assert body["temperature"] == 0
        assert "q1" in body["prompt"] and "a1" in body["prompt"]
        assert body["prompt"].index("a1") < body["prompt"].index("what is up")

    def test_bearer_token_header(self, stub_lm):
        scorer = RemoteScorer(url=stub_lm.url, token="sekrit")
        scorer.score([], self.make_query())
        assert stub_lm.requests[-1]["headers"]["Authorization"] == "Bearer sekrit"

    def test_env_var_configuration(self, stub_lm, monkeypatch):
        monkeypatch.setenv("ANNOKIT_LM_URL", stub_lm.url)
        monkeypatch.setenv("ANNOKIT_LM_TOKEN", "envtoken")
        scorer = RemoteScorer()
        scorer.score([], self.make_query())
        assert stub_lm.requests[-1]["headers"]["Authorization"] == "Bearer envtoken"

    def test_empty_generation(self, stub_lm):
        stub_lm.body = {"text": "", "token_logprobs": []}
        with pytest.raises(EmptyGenerationError):
            RemoteScorer(url=stub_lm.url).score([], self.make_query())

    def test_http_error_is_transport_error(self, stub_lm):
        stub_lm.status = 500
        with pytest.raises(TransportError):
            RemoteScorer(url=stub_lm.url).score([], self.make_query())

    def test_unreachable_is_transport_error(self):
        scorer = RemoteScorer(url="http://127.0.0.1:1/unreachable", timeout=0.2)
        with pytest.raises(TransportError):
            scorer.score([], self.make_query())

    def test_non_json_payload(self, stub_lm):
        stub_lm.raw_body = b"<html>oops</html>"
        with pytest.raises(MalformedResponseError):
            RemoteScorer(url=stub_lm.url).score([], self.make_query())

    def test_missing_logprobs_field(self, stub_lm):
        stub_lm.body = {"text": "hi"}
        with pytest.raises(MalformedResponseError, match="token_logprobs"):
            RemoteScorer(url=stub_lm.url).score([], self.make_query())

    def test_non_numeric_logprobs(self, stub_lm):
        stub_lm.body = {"text": "hi", "token_logprobs": ["a"]}
        with pytest.raises(MalformedResponseError):
            RemoteScorer(url=stub_lm.url).score([], self.make_query())

    def test_url_required(self, monkeypatch):
        monkeypatch.delenv("ANNOKIT_LM_URL", raising=False)
        with pytest.raises(ScorerError, match="ANNOKIT_LM_URL"):
            RemoteScorer()

    def test_needs_labels(self):
        assert RemoteScorer.needs_labels is True
        assert MockScorer.needs_labels is False


class TestConfidenceTableIO:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "table.json"
        save_confidence_table({"a": -1.0, "b": -0.125}, path)
        assert load_confidence_table(path) == {"a": -1.0, "b": -0.125}

    def test_version_checked(self, tmp_path):
        path = tmp_path / "table.json"
        path.write_text('{"version": 2, "scores": {}}')
        with pytest.raises(DataError, match="version"):
            load_confidence_table(path)

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "table.json"
        path.write_text('{"version": 1, "scores": {"a": Infinity}}')
        with pytest.raises(DataError, match="non-finite"):
            load_confidence_table(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_confidence_table(tmp_path / "none.json")
