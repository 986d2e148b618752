"""Pools: synthetic generation, JSONL/binmat round-trips, seeded subsampling.

Everything here runs offline on generated data.
"""

import struct
import tempfile
from pathlib import Path

import numpy as np

from annokit import load_pool, make_clustered_pool, save_pool_jsonl, subsample

workdir = Path(tempfile.mkdtemp(prefix="annokit-demo-"))

print("== generate a 3-cluster synthetic pool ==")
pool = make_clustered_pool(clusters=3, per_cluster=40, dim=8, seed=7)
print(f"N={len(pool)}, dim={pool.dim}, first id={pool.ids[0]!r}")
print(f"instance 0 cluster field: {pool.instances[0].extras['cluster']}")

print("\n== JSONL round trip ==")
jsonl_path = workdir / "pool.jsonl"
save_pool_jsonl(pool, jsonl_path)
again = load_pool(jsonl_path)
print(f"reloaded N={len(again)}; ids preserved: {again.ids == pool.ids}")

print("\n== binmat round trip ==")
binmat_path = workdir / "pool.bin"
matrix32 = pool.matrix.astype("<f4")
with open(binmat_path, "wb") as fh:
    fh.write(b"ANK1" + struct.pack("<II", *matrix32.shape) + matrix32.tobytes())
ids_path = workdir / "pool.ids"
ids_path.write_text("\n".join(pool.ids) + "\n")
binmat_pool = load_pool(binmat_path, format="binmat", ids_path=ids_path)
print(f"binmat N={len(binmat_pool)}, dim={binmat_pool.dim}")
drift = np.abs(binmat_pool.matrix - pool.matrix).max()
print(f"max float32 round-trip drift: {drift:.2e}")

print("\n== seeded subsampling (order-preserving, reproducible) ==")
sub_a = subsample(pool, 10, seed=42)
sub_b = subsample(pool, 10, seed=42)
sub_c = subsample(pool, 10, seed=43)
print(f"seed 42 twice identical: {sub_a.ids == sub_b.ids}")
print(f"seed 43 differs:         {sub_a.ids != sub_c.ids}")
print(f"sample: {sub_a.ids[:5]} ...")

print("\n== validation failures are loud and name the culprit ==")
bad = workdir / "bad.jsonl"
bad.write_text('{"id": "ok", "embedding": [1, 0]}\n{"id": "broken", "embedding": [0, 0]}\n')
try:
    load_pool(bad)
except Exception as exc:
    print(f"rejected as expected: {exc}")
