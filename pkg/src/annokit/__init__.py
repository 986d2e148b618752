"""Annotation-efficient example selection and prompt retrieval for
in-context learning: graph-vote selection over embedding pools, alternative
coreset/active-learning baselines, similarity-based demonstration retrieval,
and a seeded stability-trial harness."""

from .confidence import (
    ConfidenceScorer,
    Demonstration,
    FileScorer,
    MockScorer,
    RemoteScorer,
    load_confidence_table,
    mean_logprob,
    save_confidence_table,
    score_pool,
)
from .datamodel import (
    Instance,
    Pool,
    SelectionConfig,
    SelectionResult,
    TraceRecord,
    load_pool,
    load_result,
    save_pool_jsonl,
    save_result,
    subsample,
)
from .errors import (
    AnnokitError,
    ConfigError,
    DataError,
    EmptyGenerationError,
    MalformedResponseError,
    MissingLabelError,
    MissingScoreError,
    ScorerError,
    TransportError,
)
from .metrics import (
    MetricReport,
    TrialSummary,
    cluster_coverage,
    compute_metrics,
    div_f,
    div_i,
    make_clustered_pool,
    repr_score,
    run_trials,
)
from .retrieval import (
    DEFAULT_TEMPLATE,
    PromptTemplate,
    RetrievalResult,
    assemble_prompt,
    estimate_tokens,
    load_template,
    retrieve,
)
from .selectors import (
    VoteState,
    diversity_select,
    fast_vote_k,
    least_confidence,
    mfl_greedy,
    random_select,
    select,
    vote_k,
    vote_k_stage1,
    vote_scores,
)
from .simgraph import SimilarityGraph, build_knn_graph, cosine, pairwise_cosine

__version__ = "0.1.0"

__all__ = [
    "AnnokitError", "ConfidenceScorer", "ConfigError", "DataError",
    "DEFAULT_TEMPLATE", "Demonstration", "EmptyGenerationError", "FileScorer",
    "Instance", "MalformedResponseError", "MetricReport", "MissingLabelError",
    "MissingScoreError", "MockScorer", "Pool", "PromptTemplate",
    "RemoteScorer", "RetrievalResult", "ScorerError", "SelectionConfig",
    "SelectionResult", "SimilarityGraph", "TraceRecord", "TransportError",
    "TrialSummary", "VoteState", "assemble_prompt", "build_knn_graph",
    "cluster_coverage", "compute_metrics", "cosine", "div_f", "div_i",
    "diversity_select", "estimate_tokens", "fast_vote_k", "least_confidence",
    "load_confidence_table", "load_pool", "load_result", "load_template",
    "make_clustered_pool", "mean_logprob", "mfl_greedy", "pairwise_cosine",
    "random_select", "repr_score", "retrieve", "run_trials",
    "save_confidence_table", "save_pool_jsonl", "save_result", "score_pool",
    "select", "subsample", "vote_k", "vote_k_stage1", "vote_scores",
]
