"""Confidence scoring: mean log-probability of a generated completion.

Three interchangeable backends: an embedding-based mock (pure, offline, used
throughout the test suite), a file-backed table of precomputed scores, and a
remote HTTP endpoint speaking a minimal completion-with-logprobs protocol.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import requests

from .datamodel import Instance, Pool
from .errors import (
    DataError,
    EmptyGenerationError,
    MalformedResponseError,
    MissingScoreError,
    ScorerError,
    TransportError,
)

CONFIDENCE_SCHEMA_VERSION = 1
LM_URL_ENV = "ANNOKIT_LM_URL"
LM_TOKEN_ENV = "ANNOKIT_LM_TOKEN"


@dataclass(frozen=True)
class Demonstration:
    """One in-context example; ``source_id`` links back to its pool instance."""

    input_text: str
    output_text: str
    source_id: Optional[str] = None

    def __post_init__(self):
        if not self.input_text:
            raise DataError("demonstration input_text must be non-empty")
        if not self.output_text:
            raise DataError("demonstration output_text must be non-empty")


def mean_logprob(token_logprobs: Sequence[float]) -> float:
    """Average log-probability over generated tokens; errors on empty output."""
    if len(token_logprobs) == 0:
        raise EmptyGenerationError("empty generation: no token logprobs")
    total = math.fsum(float(x) for x in token_logprobs)
    return total / len(token_logprobs)


class ConfidenceScorer:
    """Scores one query given demonstrations; higher = more confident."""

    needs_labels: bool = False
    default_concurrency: int = 1

    def score(self, demonstrations: Sequence[Demonstration], query: Instance) -> float:
        raise NotImplementedError


class MockScorer(ConfidenceScorer):
    """Deterministic embedding-based stand-in for an LM confidence pass.

    score = -(1 - max cosine similarity of the query embedding to the
    demonstration-source embeddings); 0 when the query coincides with a
    demonstration source, -1 with no demonstrations.
    """

    def __init__(self, pool: Pool):
        self.pool = pool

    def score(self, demonstrations: Sequence[Demonstration], query: Instance) -> float:
        best = 0.0
        for demo in demonstrations:
            if demo.source_id is None:
                raise ScorerError("mock scorer needs demonstration source ids")
            sim = float(np.dot(query.embedding, self.pool[demo.source_id].embedding))
            best = max(best, min(sim, 1.0))
        return -(1.0 - best)


class FileScorer(ConfidenceScorer):
    """Passthrough to a precomputed id -> score table."""

    def __init__(self, scores: dict[str, float]):
        self.scores = scores

    @classmethod
    def from_file(cls, path: str | Path) -> "FileScorer":
        return cls(load_confidence_table(path))

    def score(self, demonstrations: Sequence[Demonstration], query: Instance) -> float:
        try:
            return self.scores[query.id]
        except KeyError:
            raise MissingScoreError(f"no confidence score for id {query.id!r}") from None


class RemoteScorer(ConfidenceScorer):
    """HTTP completion endpoint: POST {prompt, max_tokens, temperature} and
    read {text, token_logprobs} back; confidence is the mean token logprob.

    Greedy decoding (temperature 0) with a capped generation length keeps the
    completion deterministic.  URL/token fall back to the ANNOKIT_LM_URL and
    ANNOKIT_LM_TOKEN environment variables.
    """

    needs_labels = True
    default_concurrency = 4

    def __init__(
        self,
        url: str | None = None,
        token: str | None = None,
        render_prompt: Callable[[Sequence[Demonstration], str], str] | None = None,
        max_tokens: int = 64,
        timeout: float = 60.0,
    ):
        self.url = url or os.environ.get(LM_URL_ENV)
        if not self.url:
            raise ScorerError(f"remote scorer needs a URL (flag or {LM_URL_ENV})")
        self.token = token or os.environ.get(LM_TOKEN_ENV)
        if render_prompt is None:
            from .retrieval import DEFAULT_TEMPLATE, assemble_prompt

            render_prompt = lambda demos, text: assemble_prompt(demos, text, DEFAULT_TEMPLATE)
        self.render_prompt = render_prompt
        self.max_tokens = max_tokens
        self.timeout = timeout

    def score(self, demonstrations: Sequence[Demonstration], query: Instance) -> float:
        prompt = self.render_prompt(demonstrations, query.text or query.id)
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        body = {"prompt": prompt, "max_tokens": self.max_tokens, "temperature": 0}
        try:
            response = requests.post(self.url, json=body, headers=headers, timeout=self.timeout)
            response.raise_for_status()
        except requests.RequestException as exc:
            raise TransportError(f"remote scorer request failed: {exc}") from exc
        try:
            payload = response.json()
        except ValueError as exc:
            raise MalformedResponseError(f"response is not JSON: {exc}") from exc
        if not isinstance(payload, dict) or "token_logprobs" not in payload:
            raise MalformedResponseError("response missing 'token_logprobs'")
        logprobs = payload["token_logprobs"]
        if not isinstance(logprobs, list) or not all(
            isinstance(x, (int, float)) for x in logprobs
        ):
            raise MalformedResponseError("'token_logprobs' must be a list of numbers")
        return mean_logprob(logprobs)


def score_pool(
    scorer: ConfidenceScorer,
    demonstrations: Sequence[Demonstration],
    queries: Sequence[Instance],
    max_workers: int | None = None,
) -> dict[str, float]:
    """Score every query; result keyed by id, independent of completion order.

    Remote scorers run with bounded concurrency (default 4); failures abort
    with the failing instance id attached.
    """
    workers = max_workers if max_workers is not None else scorer.default_concurrency
    workers = max(1, min(workers, len(queries) or 1))

    def one(query: Instance) -> float:
        try:
            value = scorer.score(demonstrations, query)
        except ScorerError as exc:
            raise type(exc)(f"instance {query.id!r}: {exc}") from exc
        if not math.isfinite(value):
            raise ScorerError(f"instance {query.id!r}: non-finite confidence {value!r}")
        return value

    if workers == 1:
        values = [one(q) for q in queries]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, queries))
    return {q.id: v for q, v in zip(queries, values)}


def save_confidence_table(scores: dict[str, float], path: str | Path) -> None:
    payload = {"version": CONFIDENCE_SCHEMA_VERSION, "scores": scores}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_confidence_table(path: str | Path) -> dict[str, float]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"confidence table not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict) or data.get("version") != CONFIDENCE_SCHEMA_VERSION:
        raise DataError(f"{path}: expected a version {CONFIDENCE_SCHEMA_VERSION} confidence table")
    scores = data.get("scores")
    if not isinstance(scores, dict):
        raise DataError(f"{path}: 'scores' must be an object")
    out: dict[str, float] = {}
    for key, value in scores.items():
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise DataError(f"{path}: non-finite score for id {key!r}")
        out[str(key)] = float(value)
    return out
