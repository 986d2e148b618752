"""Diversity/representativeness metrics and the stability-trial harness.

div_f: 1 - mean pairwise cosine similarity of the selected embeddings.
repr:  mean over the whole pool of the best similarity to any selected.
div_i: 1 - mean pairwise Jaccard similarity of whitespace-token sets.

These are explicit stand-ins for metrics cited from prior active-learning
work; they are checked by properties and references, not against published
numbers.  The harness repeats subsample -> select -> measure over seeded
trials and reports mean/min/max per metric.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .confidence import ConfidenceScorer, MockScorer
from .datamodel import Pool, SelectionConfig, SelectionResult, subsample
from .errors import ConfigError, DataError

DEFAULT_METRICS = ("div_f", "repr")
CLUSTER_KEY = "cluster"


def _positions(pool: Pool, selected_ids: Sequence[str]) -> list[int]:
    return [pool.position(i) for i in selected_ids]


def div_f(selected_ids: Sequence[str], pool: Pool) -> float:
    """Embedding-space diversity in [0, 2]; 0 for identical vectors."""
    pos = _positions(pool, selected_ids)
    if len(pos) < 2:
        raise DataError("div_f needs at least 2 selected instances")
    sub = pool.matrix[pos]
    sims = np.clip(sub @ sub.T, -1.0, 1.0)
    iu = np.triu_indices(len(pos), k=1)
    return float(1.0 - sims[iu].mean())


def repr_score(selected_ids: Sequence[str], pool: Pool) -> float:
    """Mean best-similarity of every pool instance to the selected set."""
    pos = _positions(pool, selected_ids)
    if not pos:
        raise DataError("repr needs at least 1 selected instance")
    sims = np.clip(pool.matrix @ pool.matrix[pos].T, -1.0, 1.0)
    return float(sims.max(axis=1).mean())


def _token_set(text: str) -> frozenset[str]:
    return frozenset(text.split())


def div_i(selected_ids: Sequence[str], pool: Pool) -> float:
    """Input-space diversity via whitespace-token Jaccard; needs texts."""
    pos = _positions(pool, selected_ids)
    if len(pos) < 2:
        raise DataError("div_i needs at least 2 selected instances")
    token_sets = []
    for p in pos:
        inst = pool.instances[p]
        if inst.text is None:
            raise DataError(f"div_i needs text; instance {inst.id!r} has none")
        token_sets.append(_token_set(inst.text))
    total = 0.0
    pairs = 0
    for i in range(len(token_sets)):
        for j in range(i + 1, len(token_sets)):
            a, b = token_sets[i], token_sets[j]
            union = a | b
            total += 1.0 if not union else len(a & b) / len(union)
            pairs += 1
    return 1.0 - total / pairs


def cluster_coverage(selected_ids: Sequence[str], pool: Pool) -> tuple[int, int]:
    """(clusters touched by the selection, clusters present in the pool)."""
    def cluster_of(inst):
        value = inst.extras.get(CLUSTER_KEY)
        if value is None:
            raise DataError(f"instance {inst.id!r} has no {CLUSTER_KEY!r} field")
        return value

    all_clusters = {cluster_of(inst) for inst in pool.instances}
    picked = {cluster_of(pool.instances[p]) for p in _positions(pool, selected_ids)}
    return len(picked), len(all_clusters)


@dataclass(frozen=True)
class MetricReport:
    div_f: Optional[float] = None
    repr: Optional[float] = None
    div_i: Optional[float] = None
    cluster_coverage: Optional[tuple[int, int]] = None

    def values(self) -> dict[str, float]:
        """Numeric view (coverage as the covered count) for aggregation."""
        out: dict[str, float] = {}
        if self.div_f is not None:
            out["div_f"] = self.div_f
        if self.repr is not None:
            out["repr"] = self.repr
        if self.div_i is not None:
            out["div_i"] = self.div_i
        if self.cluster_coverage is not None:
            out["cluster_coverage"] = float(self.cluster_coverage[0])
        return out

    def to_json_dict(self) -> dict:
        data: dict[str, object] = {}
        if self.div_f is not None:
            data["div_f"] = self.div_f
        if self.repr is not None:
            data["repr"] = self.repr
        if self.div_i is not None:
            data["div_i"] = self.div_i
        if self.cluster_coverage is not None:
            covered, total = self.cluster_coverage
            data["cluster_coverage"] = {"covered": covered, "total": total}
        return data


def compute_metrics(
    selected_ids: Sequence[str], pool: Pool, metrics: Sequence[str] = DEFAULT_METRICS
) -> MetricReport:
    kwargs: dict[str, object] = {}
    for name in metrics:
        if name == "div_f":
            kwargs["div_f"] = div_f(selected_ids, pool)
        elif name == "repr":
            kwargs["repr"] = repr_score(selected_ids, pool)
        elif name == "div_i":
            kwargs["div_i"] = div_i(selected_ids, pool)
        elif name == "cluster_coverage":
            kwargs["cluster_coverage"] = cluster_coverage(selected_ids, pool)
        else:
            raise ConfigError(f"unknown metric {name!r}")
    return MetricReport(**kwargs)  # type: ignore[arg-type]


@dataclass(frozen=True)
class TrialSummary:
    """Per-metric mean/min/max over the stability trials."""

    config: dict
    trial_seeds: tuple[int, ...]
    reports: tuple[MetricReport, ...]
    results: tuple[SelectionResult, ...] = field(repr=False, default=())

    def stats(self) -> dict[str, dict[str, float]]:
        names: list[str] = []
        for report in self.reports:
            for name in report.values():
                if name not in names:
                    names.append(name)
        out = {}
        for name in names:
            values = [r.values()[name] for r in self.reports if name in r.values()]
            lo, hi = float(np.min(values)), float(np.max(values))
            # the true mean lies in [lo, hi]; clamp away summation rounding
            mean = min(max(float(np.mean(values)), lo), hi)
            out[name] = {"mean": mean, "min": lo, "max": hi}
        return out

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "trial_seeds": list(self.trial_seeds),
            "trials": [r.to_json_dict() for r in self.reports],
            "stats": self.stats(),
        }


def run_trials(
    pool: Pool,
    config: SelectionConfig,
    trials: int = 3,
    subsample_n: int = 3000,
    base_seed: int = 0,
    metrics: Sequence[str] = DEFAULT_METRICS,
    scorer_factory: Callable[[Pool], ConfidenceScorer] | None = None,
    keep_results: bool = False,
) -> TrialSummary:
    """Repeat subsample(seed=base+t) -> select -> measure for t in range(trials).

    Deterministic for a fixed base seed.  ``scorer_factory`` builds the
    scorer against each trial's subsampled pool (defaults to the embedding
    mock) for methods that need one.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if subsample_n > len(pool):
        raise DataError(f"subsample_n {subsample_n} exceeds pool size {len(pool)}")
    if scorer_factory is None:
        scorer_factory = MockScorer

    from .selectors import select  # local import: selectors also imports datamodel

    seeds = tuple(base_seed + t for t in range(trials))
    reports: list[MetricReport] = []
    results: list[SelectionResult] = []
    for seed in seeds:
        trial_pool = subsample(pool, subsample_n, seed)
        needs_scorer = config.method in ("vote_k", "least_confidence")
        scorer = scorer_factory(trial_pool) if needs_scorer else None
        result = select(trial_pool, config, scorer=scorer)
        reports.append(compute_metrics(result.selected, trial_pool, metrics))
        if keep_results:
            results.append(result)
    return TrialSummary(
        config=config.to_dict(),
        trial_seeds=seeds,
        reports=tuple(reports),
        results=tuple(results),
    )


def write_sweep_csv(path: str | Path, rows: Sequence[tuple[int, str, str, float, float, float]]) -> None:
    """Budget-sweep CSV: one row per (budget, method, metric) with stats."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["budget", "method", "metric", "mean", "min", "max"])
        for row in rows:
            writer.writerow(row)


def make_clustered_pool(
    clusters: int,
    per_cluster: int,
    dim: int,
    seed: int,
    center_scale: float = 5.0,
    spread: float = 1.0,
    with_labels: bool = True,
    with_text: bool = True,
) -> Pool:
    """Synthetic pool: a seeded mixture of isotropic Gaussian clusters.

    Each instance records its cluster index in the ``cluster`` extra field
    (and, optionally, as its label), which is what cluster_coverage reads.
    """
    if clusters < 1 or per_cluster < 1 or dim < 1:
        raise ConfigError("clusters, per_cluster and dim must all be >= 1")
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(clusters, dim)) * center_scale
    records = []
    for j in range(clusters):
        points = centers[j] + rng.normal(size=(per_cluster, dim)) * spread
        for i in range(per_cluster):
            vec = points[i]
            while float(np.linalg.norm(vec)) == 0.0:  # vanishing-probability guard
                vec = centers[j] + rng.normal(size=dim) * spread
            record: dict[str, object] = {
                "id": f"g{j}-{i}",
                "embedding": vec,
                CLUSTER_KEY: j,
            }
            if with_labels:
                record["label"] = f"cluster-{j}"
            if with_text:
                record["text"] = f"sample {i} drawn from cluster {j}"
            records.append(record)
    return Pool.from_records(records)
