"""All six selective-annotation strategies on one clustered pool.

The interesting comparison is cluster coverage and the diversity/
representativeness metrics: graph voting spreads its budget across
clusters, random frequently misses some.
"""

from annokit import (
    MockScorer,
    SelectionConfig,
    cluster_coverage,
    compute_metrics,
    select,
)
from annokit.metrics import make_clustered_pool

pool = make_clustered_pool(clusters=8, per_cluster=50, dim=12, seed=11)
budget = 16
print(f"pool: N={len(pool)}, {8} clusters; budget M={budget}\n")

print(f"{'method':<18}{'coverage':<10}{'div_f':<8}{'repr':<8}trace stages")
for method in ("vote_k", "fast_vote_k", "mfl", "diversity", "least_confidence", "random"):
    config = SelectionConfig(method=method, budget=budget, k=20, rho=10.0, seed=2)
    scorer = MockScorer(pool) if method in ("vote_k", "least_confidence") else None
    result = select(pool, config, scorer=scorer)

    covered, total = cluster_coverage(result.selected, pool)
    report = compute_metrics(result.selected, pool, ("div_f", "repr"))
    stages = sorted({rec.stage for rec in result.trace})
    print(f"{method:<18}{covered}/{total:<8}{report.div_f:<8.3f}{report.repr:<8.3f}{stages}")

print("\n== vote-k trace anatomy (M=16 -> 2 graph votes + 14 bucket picks) ==")
config = SelectionConfig(method="vote_k", budget=budget, k=20, rho=10.0)
result = select(pool, config, scorer=MockScorer(pool))
for rec, picked in list(zip(result.trace, result.selected))[:6]:
    bucket = "" if rec.bucket is None else f" bucket={rec.bucket}"
    print(f"  step {rec.step:2d}  {rec.stage:<18} score={rec.score:.4f}{bucket}  -> {picked}")
print("  ...")

print("\n== fast vote-k is stage 1 run for the whole budget ==")
fast = select(pool, SelectionConfig(method="fast_vote_k", budget=budget, k=20))
prefix = fast.selected[:2] == result.selected[:2]
print(f"first 2 picks match vote-k stage 1: {prefix}")

print("\n== single-pass variant (top-M of the initial scores, no discounting) ==")
single = select(pool, SelectionConfig(method="fast_vote_k", budget=budget, k=20,
                                      single_pass=True))
overlap = len(set(single.selected) & set(fast.selected))
print(f"overlap with iterative fast vote-k: {overlap}/{budget}")
print(f"single-pass coverage: {cluster_coverage(single.selected, pool)[0]}/8 vs "
      f"iterative {cluster_coverage(fast.selected, pool)[0]}/8")
