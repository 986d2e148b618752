"""Cosine kernel and directed kNN graph over a pool.

The graph has an out-edge from every vertex to its k most cosine-similar
neighbors (ties broken toward the lower index), plus the explicit transpose
(in-edges) because vote scoring iterates over in-neighbors.  Pools are small
enough (<= a few thousand) that exact O(N^2 d) pairwise computation is the
right tool; no approximate index is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import Pool
from .errors import DataError


def cosine(u, v) -> float:
    """Cosine similarity dot(u,v)/(|u||v|), clipped into [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DataError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DataError("cosine undefined for zero-norm vector")
    return float(np.clip(float(np.dot(u, v)) / (nu * nv), -1.0, 1.0))


def pairwise_cosine(pool: Pool) -> np.ndarray:
    """Full similarity matrix; exactly symmetric, unit diagonal, clipped.

    Rows of ``pool.matrix`` are unit-norm, so this is one matmul.  The upper
    triangle is mirrored so S[i, j] and S[j, i] are bit-identical.
    """
    s = pool.matrix @ pool.matrix.T
    s = np.triu(s, 1)
    s = s + s.T
    np.clip(s, -1.0, 1.0, out=s)
    np.fill_diagonal(s, 1.0)
    return s


@dataclass(frozen=True)
class SimilarityGraph:
    """Directed kNN graph over pool positions 0..n-1.

    ``neighbor_idx[v]`` lists v's out-neighbors sorted by (similarity desc,
    index asc); ``neighbor_sim`` the matching similarities.  ``in_edges[u]``
    is the ascending array of voters v with an edge v -> u.
    """

    n: int
    k: int
    neighbor_idx: np.ndarray  # (n, out_degree) int64
    neighbor_sim: np.ndarray  # (n, out_degree) float64
    in_edges: tuple[np.ndarray, ...]

    @property
    def out_degree(self) -> int:
        return int(self.neighbor_idx.shape[1])

    def out_edges(self, v: int) -> list[tuple[int, float]]:
        return list(zip(self.neighbor_idx[v].tolist(), self.neighbor_sim[v].tolist()))

    def to_json_dict(self) -> dict:
        # debug dump only; not a stability-guaranteed format
        return {
            "n": self.n,
            "k": self.k,
            "out_edges": [
                [[int(i), float(s)] for i, s in self.out_edges(v)] for v in range(self.n)
            ],
        }


def build_knn_graph(pool: Pool, k: int) -> SimilarityGraph:
    """Exact kNN graph: per vertex the min(k, N-1) highest-cosine neighbors."""
    if k < 1:
        raise DataError("k must be >= 1")
    n = len(pool)
    out_degree = min(k, n - 1)
    sims = pairwise_cosine(pool)
    np.fill_diagonal(sims, -np.inf)  # no self-edges

    if out_degree == 0:
        neighbor_idx = np.zeros((n, 0), dtype=np.int64)
        neighbor_sim = np.zeros((n, 0), dtype=np.float64)
        in_edges = tuple(np.zeros(0, dtype=np.int64) for _ in range(n))
        return SimilarityGraph(n, k, neighbor_idx, neighbor_sim, in_edges)

    # stable argsort of -sims: equal similarities keep ascending-index order
    order = np.argsort(-sims, axis=1, kind="stable")[:, :out_degree]
    neighbor_idx = np.ascontiguousarray(order.astype(np.int64))
    neighbor_sim = np.ascontiguousarray(
        np.take_along_axis(sims, neighbor_idx, axis=1)
    )

    src = np.repeat(np.arange(n, dtype=np.int64), out_degree)
    dst = neighbor_idx.ravel()
    by_dst = np.argsort(dst, kind="stable")  # voters stay ascending per target
    dst_sorted = dst[by_dst]
    src_sorted = src[by_dst]
    starts = np.searchsorted(dst_sorted, np.arange(n))
    ends = np.searchsorted(dst_sorted, np.arange(n), side="right")
    in_edges = tuple(
        np.ascontiguousarray(src_sorted[starts[u]:ends[u]]) for u in range(n)
    )
    return SimilarityGraph(n, k, neighbor_idx, neighbor_sim, in_edges)
