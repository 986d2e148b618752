"""Selective-annotation strategies over an embedding pool.

Six selectors share one result shape: graph-vote selection with confidence
bucketing (``vote_k``), its graph-only variant (``fast_vote_k``), greedy
facility-location (``mfl_greedy``), farthest-point embedding diversity
(``diversity_select``), iterative least-confidence (``least_confidence``),
and seeded random (``random_select``).

Vote scoring discounts voters that already sit next to selected instances:
a voter v contributes rho**(-c) where c counts v's out-neighbors among the
selected set, and every candidate u sums the contributions of its remaining
in-neighbors.  Scores are evaluated from integer per-level voter counts,
accumulated level-ascending with a shared power table, so reruns (and
independent recomputations) produce bit-identical floats; all argmax/argmin
ties break toward the lower pool index.
"""

from __future__ import annotations

from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .confidence import ConfidenceScorer, Demonstration, score_pool
from .datamodel import (
    Pool,
    SelectionConfig,
    SelectionResult,
    TraceRecord,
)
from .errors import ConfigError, MissingLabelError
from .prng import SplitMix64
from .simgraph import SimilarityGraph, build_knn_graph, pairwise_cosine

LabelsFor = Callable[[str], Optional[str]]


def discount_powers(rho: float, max_count: int) -> list[float]:
    """[rho**0, rho**-1, ..., rho**-max_count] as plain floats (shared table)."""
    return [rho ** (-c) for c in range(max_count + 1)]


class VoteState:
    """Bookkeeping for graph voting: selected order, remaining set, counts.

    ``c[v]`` is the number of v's out-neighbors already selected; it is
    updated incrementally on every pick and must always equal a from-scratch
    recount (see ``recount``).
    """

    def __init__(self, graph: SimilarityGraph):
        self.graph = graph
        self.selected: list[int] = []
        self.remaining = np.ones(graph.n, dtype=bool)
        self.c = np.zeros(graph.n, dtype=np.int64)
        # flattened transpose edges (voter, candidate) for fast vote scoring
        lengths = np.array([len(e) for e in graph.in_edges], dtype=np.int64)
        self.in_flat_voter = (
            np.concatenate(graph.in_edges) if lengths.sum() else np.zeros(0, dtype=np.int64)
        )
        self.in_flat_cand = np.repeat(np.arange(graph.n, dtype=np.int64), lengths)

    def pick(self, u: int) -> None:
        if not self.remaining[u]:
            raise ValueError(f"vertex {u} already selected")
        self.remaining[u] = False
        self.selected.append(u)
        self.c[self.graph.in_edges[u]] += 1

    def recount(self) -> np.ndarray:
        """Recompute c from the graph and selected set (invariant check)."""
        fresh = np.zeros(self.graph.n, dtype=np.int64)
        for u in self.selected:
            fresh[self.graph.in_edges[u]] += 1
        return fresh


def vote_scores(graph: SimilarityGraph, state: VoteState, rho: float) -> np.ndarray:
    """Vote score for every remaining vertex; NaN at selected positions.

    score(u) = sum over remaining in-neighbors v of rho**(-c(v)), evaluated
    as integer counts per discount level accumulated level-ascending.
    """
    if not rho > 1.0:
        raise ConfigError("rho must be > 1")
    table = discount_powers(rho, graph.out_degree)
    levels = len(table)
    live = state.remaining[state.in_flat_voter]
    keyed = state.in_flat_cand[live] * levels + state.c[state.in_flat_voter[live]]
    counts = np.bincount(keyed, minlength=graph.n * levels).reshape(graph.n, levels)
    scores = np.zeros(graph.n, dtype=np.float64)
    for level, weight in enumerate(table):
        scores += counts[:, level] * weight
    scores[~state.remaining] = np.nan
    return scores


def _argbest(values: np.ndarray, eligible: np.ndarray, largest: bool = True) -> int:
    """Index of the max (or min) among eligible positions, tie -> lower index."""
    work = np.where(eligible, values, -np.inf if largest else np.inf)
    return int(np.argmax(work) if largest else np.argmin(work))


def vote_k_stage1(
    graph: SimilarityGraph, count: int, rho: float, state: VoteState | None = None
) -> tuple[list[int], list[float]]:
    """Iterate ``count`` highest-vote-score picks, updating discounts each step."""
    if state is None:
        state = VoteState(graph)
    if count > int(state.remaining.sum()):
        raise ConfigError(f"cannot pick {count} of {int(state.remaining.sum())} remaining")
    picks: list[int] = []
    scores_at_pick: list[float] = []
    for _ in range(count):
        scores = vote_scores(graph, state, rho)
        u = _argbest(scores, state.remaining)
        picks.append(u)
        scores_at_pick.append(float(scores[u]))
        state.pick(u)
    return picks, scores_at_pick


def _labels_callable(pool: Pool, labels_for: Mapping[str, str] | LabelsFor | None) -> LabelsFor:
    if labels_for is None:
        return lambda instance_id: pool[instance_id].label
    if isinstance(labels_for, Mapping):
        return lambda instance_id: labels_for.get(instance_id)
    return labels_for


def _demonstrations_for(
    pool: Pool,
    positions: Sequence[int],
    labels_for: LabelsFor,
    needs_labels: bool,
) -> list[Demonstration]:
    """Demonstrations for the selected instances, in selection order.

    Scorers that never read demonstration text (mock, file-backed) get the
    instance id as a stand-in output; scorers that render prompts demand a
    real label and fail loudly without one.
    """
    demos = []
    for pos in positions:
        inst = pool.instances[pos]
        label = labels_for(inst.id)
        if label is None:
            if needs_labels:
                raise MissingLabelError(
                    f"no label for selected id {inst.id!r}; scorer requires labeled demonstrations"
                )
            label = inst.id
        demos.append(Demonstration(inst.text or inst.id, label, source_id=inst.id))
    return demos


def _bucket_sizes(total: int, buckets: int) -> list[int]:
    """Contiguous bucket sizes differing by at most 1, larger buckets first."""
    base, rem = divmod(total, buckets)
    return [base + 1 if j < rem else base for j in range(buckets)]


def _make_result(
    pool: Pool, config: SelectionConfig, picks: Sequence[int], trace: Sequence[TraceRecord]
) -> SelectionResult:
    return SelectionResult(
        method=config.method,
        config=config.to_dict(),
        selected=tuple(pool.instances[p].id for p in picks),
        trace=tuple(trace),
    )


def vote_k(
    pool: Pool,
    graph: SimilarityGraph,
    config: SelectionConfig,
    scorer: ConfidenceScorer,
    labels_for: Mapping[str, str] | LabelsFor | None = None,
    max_workers: int | None = None,
) -> SelectionResult:
    """Two-stage selection: graph votes, then confidence-bucketed graph votes.

    Stage 1 takes ``stage_one_count`` pure vote picks.  Stage 2 scores every
    remaining instance with the scorer (demonstrations = stage-1 picks),
    sorts ascending by confidence, partitions into ``budget`` near-equal
    contiguous buckets, keeps the lowest-confidence ``budget - stage_one``
    buckets (discarding the most confident), and takes the current top vote
    score from each kept bucket, updating discounts after every pick.
    """
    m = config.budget
    s1 = config.resolved_stage_one_count()
    if s1 >= m:
        raise ConfigError(f"stage_one_count ({s1}) must be < budget ({m})")
    if m > len(pool):
        raise ConfigError(f"budget {m} exceeds pool size {len(pool)}")
    if scorer is None:
        raise ConfigError("vote_k requires a confidence scorer")
    labels = _labels_callable(pool, labels_for)

    state = VoteState(graph)
    stage1_picks, stage1_scores = vote_k_stage1(graph, s1, config.rho, state)
    trace = [
        TraceRecord(step=i, stage="graph_vote", score=stage1_scores[i])
        for i in range(len(stage1_picks))
    ]
    picks = list(stage1_picks)

    demos = _demonstrations_for(pool, stage1_picks, labels, scorer.needs_labels)
    remaining = np.flatnonzero(state.remaining)
    confidences = score_pool(
        scorer,
        demos,
        [pool.instances[int(p)] for p in remaining],
        max_workers=max_workers,
    )
    # ascending confidence, ties toward the lower pool index
    conf_order = sorted(remaining.tolist(), key=lambda p: (confidences[pool.instances[p].id], p))

    sizes = _bucket_sizes(len(conf_order), m)
    kept = m - s1
    buckets: list[list[int]] = []
    offset = 0
    for size in sizes[:kept]:
        buckets.append(conf_order[offset:offset + size])
        offset += size

    for j, members in enumerate(buckets):
        if not members:
            continue  # degenerate: fewer remaining instances than buckets
        scores = vote_scores(graph, state, config.rho)
        eligible = np.zeros(graph.n, dtype=bool)
        eligible[members] = True
        u = _argbest(scores, eligible)
        trace.append(
            TraceRecord(step=len(picks), stage="confidence_bucket",
                        score=float(scores[u]), bucket=j)
        )
        picks.append(u)
        state.pick(u)

    # shortfall from skipped empty buckets: continue plain vote picks
    while len(picks) < m:
        scores = vote_scores(graph, state, config.rho)
        u = _argbest(scores, state.remaining)
        trace.append(TraceRecord(step=len(picks), stage="graph_vote", score=float(scores[u])))
        picks.append(u)
        state.pick(u)

    return _make_result(pool, config, picks, trace)


def fast_vote_k(
    pool: Pool, graph: SimilarityGraph, config: SelectionConfig
) -> SelectionResult:
    """Vote-k's graph stage run for the full budget; no confidence pass.

    With ``single_pass`` set, scores are computed once from the empty
    selection and the top ``budget`` taken outright (no iterative
    discounting); the default iterative form matches stage 1 exactly.
    """
    m = config.budget
    if m > len(pool):
        raise ConfigError(f"budget {m} exceeds pool size {len(pool)}")
    if config.single_pass:
        state = VoteState(graph)
        scores = vote_scores(graph, state, config.rho)
        order = np.argsort(-scores, kind="stable")[:m]
        trace = [
            TraceRecord(step=i, stage="graph_vote", score=float(scores[p]))
            for i, p in enumerate(order)
        ]
        return _make_result(pool, config, order.tolist(), trace)

    picks, scores_at_pick = vote_k_stage1(graph, m, config.rho)
    trace = [
        TraceRecord(step=i, stage="graph_vote", score=scores_at_pick[i])
        for i in range(len(picks))
    ]
    return _make_result(pool, config, picks, trace)


def mfl_greedy(pool: Pool, config: SelectionConfig) -> SelectionResult:
    """Greedy facility location: maximize total best-similarity coverage.

    Coverage rho_i (best similarity of instance i to the selected set) starts
    at -1; each step picks the candidate with the largest total marginal gain
    sum_i max(0, cos(x_i, x_u) - rho_i) and updates the coverage row.
    """
    m = config.budget
    n = len(pool)
    if m > n:
        raise ConfigError(f"budget {m} exceeds pool size {n}")
    sims = pairwise_cosine(pool)
    covered = np.full(n, -1.0)
    remaining = np.ones(n, dtype=bool)
    picks: list[int] = []
    trace: list[TraceRecord] = []
    for step in range(m):
        gains = np.full(n, -np.inf)
        for u in np.flatnonzero(remaining):
            gains[u] = float(np.sum(np.maximum(sims[u] - covered, 0.0)))
        u = int(np.argmax(gains))
        trace.append(TraceRecord(step=step, stage="greedy", score=float(gains[u])))
        picks.append(u)
        remaining[u] = False
        covered = np.maximum(covered, sims[u])
    return _make_result(pool, config, picks, trace)


def diversity_select(pool: Pool, config: SelectionConfig) -> SelectionResult:
    """Farthest-point selection: random seed pick, then repeatedly the
    candidate with the smallest total cosine similarity to the selected set."""
    m = config.budget
    n = len(pool)
    if m > n:
        raise ConfigError(f"budget {m} exceeds pool size {n}")
    sims = pairwise_cosine(pool)
    remaining = np.ones(n, dtype=bool)
    total_sim = np.zeros(n, dtype=np.float64)

    first = SplitMix64(config.seed).below(n)
    picks = [first]
    trace = [TraceRecord(step=0, stage="seed", score=None)]
    remaining[first] = False
    total_sim += sims[first]

    for step in range(1, m):
        u = _argbest(total_sim, remaining, largest=False)
        trace.append(TraceRecord(step=step, stage="greedy", score=float(total_sim[u])))
        picks.append(u)
        remaining[u] = False
        total_sim += sims[u]
    return _make_result(pool, config, picks, trace)


def least_confidence(
    pool: Pool,
    config: SelectionConfig,
    scorer: ConfidenceScorer,
    labels_for: Mapping[str, str] | LabelsFor | None = None,
    max_workers: int | None = None,
) -> SelectionResult:
    """Seeded random round, then rounds of the lowest-confidence instances.

    Every round scores all remaining instances with the current selection as
    demonstrations and admits the ``lc_round_size`` least confident (final
    round truncated to the budget).
    """
    m = config.budget
    n = len(pool)
    if m > n:
        raise ConfigError(f"budget {m} exceeds pool size {n}")
    if scorer is None:
        raise ConfigError("least_confidence requires a confidence scorer")
    round_size = config.resolved_lc_round_size()
    labels = _labels_callable(pool, labels_for)

    seed_count = min(round_size, m)
    picks = SplitMix64(config.seed).sample_indices(n, seed_count)
    trace = [TraceRecord(step=i, stage="seed", score=None) for i in range(seed_count)]
    remaining = np.ones(n, dtype=bool)
    remaining[picks] = False

    while len(picks) < m:
        demos = _demonstrations_for(pool, picks, labels, scorer.needs_labels)
        rest = np.flatnonzero(remaining)
        confidences = score_pool(
            scorer, demos, [pool.instances[int(p)] for p in rest], max_workers=max_workers
        )
        ranked = sorted(rest.tolist(), key=lambda p: (confidences[pool.instances[p].id], p))
        for p in ranked[: min(round_size, m - len(picks))]:
            trace.append(
                TraceRecord(step=len(picks), stage="confidence_bucket",
                            score=float(confidences[pool.instances[p].id]))
            )
            picks.append(p)
            remaining[p] = False
    return _make_result(pool, config, picks, trace)


def random_select(pool: Pool, config: SelectionConfig) -> SelectionResult:
    """Uniform selection without replacement, in draw order."""
    m = config.budget
    if m > len(pool):
        raise ConfigError(f"budget {m} exceeds pool size {len(pool)}")
    picks = SplitMix64(config.seed).sample_indices(len(pool), m)
    trace = [TraceRecord(step=i, stage="seed", score=None) for i in range(m)]
    return _make_result(pool, config, picks, trace)


def select(
    pool: Pool,
    config: SelectionConfig,
    scorer: ConfidenceScorer | None = None,
    labels_for: Mapping[str, str] | LabelsFor | None = None,
    graph: SimilarityGraph | None = None,
    max_workers: int | None = None,
) -> SelectionResult:
    """Run the selector named by ``config.method``; builds the kNN graph when
    the method needs one and none is supplied."""
    if config.budget > len(pool):
        raise ConfigError(f"budget {config.budget} exceeds pool size {len(pool)}")
    if config.method in ("vote_k", "fast_vote_k") and graph is None:
        graph = build_knn_graph(pool, config.k)
    if config.method == "vote_k":
        return vote_k(pool, graph, config, scorer, labels_for, max_workers=max_workers)
    if config.method == "fast_vote_k":
        return fast_vote_k(pool, graph, config)
    if config.method == "mfl":
        return mfl_greedy(pool, config)
    if config.method == "diversity":
        return diversity_select(pool, config)
    if config.method == "least_confidence":
        return least_confidence(pool, config, scorer, labels_for, max_workers=max_workers)
    if config.method == "random":
        return random_select(pool, config)
    raise ConfigError(f"unknown method {config.method!r}")
