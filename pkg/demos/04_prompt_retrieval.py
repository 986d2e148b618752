"""Similarity-based retrieval and token-budgeted prompt assembly.

Demonstrations enter the prompt in ascending similarity order (the most
similar example sits right before the query), and the greedy admission
stops at the first example that would blow the token budget.
"""

import numpy as np

from annokit import Pool, PromptTemplate, estimate_tokens, retrieve


def small_labeled_pool(n, dim, seed):
    rng = np.random.default_rng(seed)
    topics = ["geography", "cooking", "astronomy", "music"]
    return Pool.from_records(
        {
            "id": f"ex{i}",
            "embedding": rng.normal(size=dim),
            "text": f"question {i} about {topics[i % len(topics)]}",
            "label": f"answer {i}",
        }
        for i in range(n)
    )


pool = small_labeled_pool(n=12, dim=6, seed=5)
rng = np.random.default_rng(8)
query = rng.normal(size=6)

print("== generous budget: everything fits ==")
result = retrieve(pool, query, token_budget=100_000, query_text="what about item twelve?")
print(f"admitted {len(result.demonstrations)} demonstrations, "
      f"{result.token_estimate} tokens")
print("similarity order (ascending -> recency bias):")
for demo_id, sim in result.demonstrations[-4:]:
    print(f"  {demo_id}: {sim:+.4f}")

print("\n== tight budget: greedy prefix of the ranking ==")
for budget in (120, 60, 30):
    result = retrieve(pool, query, token_budget=budget, query_text="what now?")
    ids = [d for d, _ in result.demonstrations]
    print(f"budget {budget:4d}: {len(ids)} admitted "
          f"({result.token_estimate} tokens) {ids}")

print("\n== max_examples caps the count even when tokens remain ==")
result = retrieve(pool, query, token_budget=100_000, max_examples=2)
print(f"admitted: {[d for d, _ in result.demonstrations]}")

print("\n== custom template ==")
template = PromptTemplate(
    example_pattern="Q: {input}\nA: {output}",
    query_pattern="Q: {input}\nA:",
    separator="\n###\n",
)
result = retrieve(pool, query, token_budget=400, template=template,
                  query_text="and finally?")
print(result.prompt)
print(f"\n(token estimate {result.token_estimate}; "
      f"heuristic = ceil(bytes/4), e.g. {estimate_tokens('12345678')} for 8 bytes)")
