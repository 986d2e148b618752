"""Similarity-based prompt retrieval and token-budgeted prompt assembly.

Demonstrations are ranked by cosine similarity to the query, admitted most
similar first while the assembled prompt stays inside the token budget, then
emitted in ascending-similarity order with the query last, so the strongest
examples sit closest to the generation point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .confidence import Demonstration
from .datamodel import Pool
from .errors import DataError

DEFAULT_TOKEN_BUDGET = 2048

TokenEstimator = Callable[[str], int]


def estimate_tokens(text: str) -> int:
    """ceil(utf-8 bytes / 4); cheap, monotone proxy for an LM tokenizer."""
    if not text:
        return 0
    return max(1, math.ceil(len(text.encode("utf-8")) / 4))


@dataclass(frozen=True)
class PromptTemplate:
    """Patterns with {input}/{output} slots plus the example separator."""

    example_pattern: str = "Input: {input}\nOutput: {output}"
    query_pattern: str = "Input: {input}\nOutput:"
    separator: str = "\n\n"

    def __post_init__(self):
        if "{input}" not in self.example_pattern or "{output}" not in self.example_pattern:
            raise DataError("example_pattern must contain {input} and {output} slots")
        if "{input}" not in self.query_pattern:
            raise DataError("query_pattern must contain an {input} slot")

    def render_example(self, demo: Demonstration) -> str:
        return self.example_pattern.replace("{input}", demo.input_text).replace(
            "{output}", demo.output_text
        )

    def render_query(self, query_input: str) -> str:
        return self.query_pattern.replace("{input}", query_input)


DEFAULT_TEMPLATE = PromptTemplate()


def load_template(path: str | Path) -> PromptTemplate:
    """Template from a small JSON or TOML file (keys as in PromptTemplate)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"template file not found: {path}")
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except Exception as exc:
            raise DataError(f"{path}: invalid TOML: {exc}") from None
    else:
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise DataError(f"{path}: expected an object with template fields")
    kwargs = {k: data[k] for k in ("example_pattern", "query_pattern", "separator") if k in data}
    return PromptTemplate(**kwargs)


def assemble_prompt(
    demonstrations: Sequence[Demonstration],
    query_input: str,
    template: PromptTemplate = DEFAULT_TEMPLATE,
) -> str:
    """Join rendered examples (given in ascending-similarity order) and the query."""
    parts = [template.render_example(demo) for demo in demonstrations]
    parts.append(template.render_query(query_input))
    return template.separator.join(parts)


@dataclass(frozen=True)
class RetrievalResult:
    """Demonstrations in ascending-similarity order plus the final prompt."""

    demonstrations: tuple[tuple[str, float], ...]
    prompt: str
    token_estimate: int

    def to_json_dict(self) -> dict:
        return {
            "demonstrations": [[d, s] for d, s in self.demonstrations],
            "prompt": self.prompt,
            "token_estimate": self.token_estimate,
        }


def retrieve(
    annotated: Pool,
    query_embedding,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
    max_examples: Optional[int] = None,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    query_text: Optional[str] = None,
    token_estimator: TokenEstimator = estimate_tokens,
) -> RetrievalResult:
    """Greedy prefix retrieval from an annotated pool.

    Candidates are ranked by similarity descending (tie toward the lower
    index) and admitted in that order until the next one would overflow the
    budget (or exceed ``max_examples``); admission stops at the first misfit,
    so the admitted set is always a prefix of the ranking.
    """
    for inst in annotated.instances:
        if inst.label is None:
            raise DataError(f"unlabeled instance {inst.id!r} in annotated pool")

    query = np.asarray(query_embedding, dtype=np.float64)
    if query.ndim != 1 or query.size != annotated.dim:
        raise DataError(
            f"query embedding has dimension {query.size}, pool has {annotated.dim}"
        )
    if not np.all(np.isfinite(query)):
        raise DataError("non-finite value in query embedding")
    norm = float(np.linalg.norm(query))
    if norm == 0.0:
        raise DataError("zero-norm query embedding")
    query = query / norm

    rendered_query = query_text if query_text is not None else "{query}"
    query_only = assemble_prompt([], rendered_query, template)
    if token_estimator(query_only) > token_budget:
        raise DataError(
            f"query portion alone needs {token_estimator(query_only)} tokens; budget is {token_budget}"
        )

    sims = np.clip(annotated.matrix @ query, -1.0, 1.0)
    ranking = np.argsort(-sims, kind="stable")

    admitted: list[int] = []  # most similar first
    for pos in ranking.tolist():
        if max_examples is not None and len(admitted) >= max_examples:
            break
        candidate = admitted + [pos]
        demos = _demos_ascending(annotated, candidate)
        prompt = assemble_prompt(demos, rendered_query, template)
        if token_estimator(prompt) > token_budget:
            break
        admitted = candidate

    demos = _demos_ascending(annotated, admitted)
    prompt = assemble_prompt(demos, rendered_query, template)
    ascending = tuple(
        (annotated.instances[pos].id, float(sims[pos])) for pos in reversed(admitted)
    )
    return RetrievalResult(
        demonstrations=ascending,
        prompt=prompt,
        token_estimate=token_estimator(prompt),
    )


def _demos_ascending(pool: Pool, admitted_desc: Sequence[int]) -> list[Demonstration]:
    """Demonstrations for admitted positions, flipped into ascending order."""
    demos = []
    for pos in reversed(list(admitted_desc)):
        inst = pool.instances[pos]
        demos.append(
            Demonstration(inst.text or inst.id, inst.label, source_id=inst.id)
        )
    return demos
