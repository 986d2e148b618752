import numpy as np
import pytest

from annokit.datamodel import Pool


def pool_from_rows(rows, ids=None, texts=None, labels=None, clusters=None):
    """Build a pool straight from a list of raw embedding rows."""
    records = []
    for i, row in enumerate(rows):
        record = {
            "id": ids[i] if ids else f"p{i}",
            "embedding": np.asarray(row, dtype=np.float64),
        }
        if texts is not None:
            record["text"] = texts[i]
        if labels is not None:
            record["label"] = labels[i]
        if clusters is not None:
            record["cluster"] = clusters[i]
        records.append(record)
    return Pool.from_records(records)


def random_pool(n, d, seed, labeled=False):
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(n, d))
    labels = [f"y{i}" for i in range(n)] if labeled else None
    texts = [f"text {i}" for i in range(n)] if labeled else None
    return pool_from_rows(rows, texts=texts, labels=labels)


@pytest.fixture
def six_point_pool():
    # two tight groups plus two stragglers; similarities well separated
    rows = [
        [1.0, 0.05],
        [1.0, 0.1],
        [0.9, 0.2],
        [-0.2, 1.0],
        [-0.1, 0.9],
        [0.5, -0.8],
    ]
    return pool_from_rows(rows)


@pytest.fixture
def two_cluster_pool():
    # 5 points hugging +x, 5 hugging +y
    rng = np.random.default_rng(42)
    rows = []
    for i in range(5):
        rows.append([10.0, float(rng.normal() * 0.3)])
    for i in range(5):
        rows.append([float(rng.normal() * 0.3), 10.0])
    return pool_from_rows(rows)
