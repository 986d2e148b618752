"""The directed kNN similarity graph that drives vote-based selection.

Out-edges point to the most cosine-similar neighbors; in-edges (the
transpose) are who votes for you.  In-degree is the raw popularity signal
the selectors start from.
"""

import numpy as np

from annokit import build_knn_graph, cosine, make_clustered_pool

pool = make_clustered_pool(clusters=2, per_cluster=25, dim=6, seed=3)
print(f"pool: N={len(pool)}, dim={pool.dim}")

print("\n== cosine kernel ==")
a, b = pool.matrix[0], pool.matrix[1]
print(f"cos(same-cluster pair)  = {cosine(a, b):+.4f}")
print(f"cos(cross-cluster pair) = {cosine(pool.matrix[0], pool.matrix[30]):+.4f}")
print(f"scale invariance: cos(3u, v) == cos(u, v) -> {cosine(3 * a, b) == cosine(a, b)}")

print("\n== build graph, k=5 ==")
graph = build_knn_graph(pool, 5)
print(f"n={graph.n}, requested k={graph.k}, out_degree={graph.out_degree}")

v = 0
print(f"\nout-edges of vertex {v} (sorted by similarity desc):")
for u, sim in graph.out_edges(v):
    print(f"  -> {u:3d}  sim={sim:+.4f}  ({pool.instances[u].id})")

in_degrees = np.array([len(graph.in_edges[u]) for u in range(graph.n)])
print(f"\nin-degree: min={in_degrees.min()}, mean={in_degrees.mean():.1f}, "
      f"max={in_degrees.max()}")
top = int(np.argmax(in_degrees))
print(f"most-voted vertex: {top} ({pool.instances[top].id}), "
      f"in-degree {in_degrees[top]}")

print("\ntranspose consistency check:")
ok = all(
    v in graph.in_edges[u].tolist()
    for v in range(graph.n)
    for u, _ in graph.out_edges(v)
)
print(f"  every out-edge mirrored in in_edges: {ok}")
