"""Pools of embedded instances: ingestion, validation, subsampling, results.

Embeddings are L2-normalized once at load, so cosine similarity reduces to a
dot product everywhere downstream.  Zero-norm or non-finite embeddings are
hard ingestion errors.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .prng import SplitMix64

RESULT_SCHEMA_VERSION = 1
BINMAT_MAGIC = b"ANK1"

SELECTION_METHODS = (
    "vote_k",
    "fast_vote_k",
    "mfl",
    "diversity",
    "least_confidence",
    "random",
)

# Trace stages: seeded random pick, kNN-graph vote pick, confidence-driven
# pick (vote-k stage 2 and least-confidence rounds), greedy objective pick.
TRACE_STAGES = ("seed", "graph_vote", "confidence_bucket", "greedy")


@dataclass(frozen=True)
class Instance:
    """One pool member; ``embedding`` is the unit-norm vector."""

    id: str
    embedding: np.ndarray
    text: Optional[str] = None
    label: Optional[str] = None
    extras: Mapping[str, object] = field(default_factory=dict)


class Pool:
    """Ordered, immutable collection of instances with uniform dimensionality.

    ``matrix`` holds the row-normalized embeddings, shape (N, dim), float64.
    Safe for concurrent reads after construction.
    """

    def __init__(self, instances: Sequence[Instance], matrix: np.ndarray):
        self.instances = list(instances)
        self.matrix = matrix
        self.dim = int(matrix.shape[1])
        self.index = {inst.id: i for i, inst in enumerate(self.instances)}
        self.matrix.setflags(write=False)

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def ids(self) -> list[str]:
        return [inst.id for inst in self.instances]

    def __getitem__(self, instance_id: str) -> Instance:
        try:
            return self.instances[self.index[instance_id]]
        except KeyError:
            raise DataError(f"unknown instance id {instance_id!r}") from None

    def position(self, instance_id: str) -> int:
        try:
            return self.index[instance_id]
        except KeyError:
            raise DataError(f"unknown instance id {instance_id!r}") from None

    def subset(self, positions: Sequence[int]) -> "Pool":
        """New pool containing the given rows, in the given order."""
        matrix = np.ascontiguousarray(self.matrix[list(positions)])
        instances = []
        for row, pos in enumerate(positions):
            src = self.instances[pos]
            instances.append(
                Instance(src.id, matrix[row], src.text, src.label, src.extras)
            )
        return Pool(instances, matrix)

    @staticmethod
    def from_records(records: Iterable[Mapping[str, object]]) -> "Pool":
        """Validate raw records ({id, embedding, text?, label?, ...}) into a Pool.

        Raises DataError naming the offending id on the first violation:
        duplicate id, dimension mismatch, non-finite component, zero norm.
        """
        ids: list[str] = []
        texts: list[Optional[str]] = []
        labels: list[Optional[str]] = []
        extras: list[dict] = []
        rows: list[np.ndarray] = []
        seen: set[str] = set()
        dim: Optional[int] = None

        for record in records:
            rid = record.get("id")
            if not isinstance(rid, str) or not rid:
                raise DataError(f"instance id must be a non-empty string, got {rid!r}")
            if rid in seen:
                raise DataError(f"duplicate id {rid!r}")
            seen.add(rid)

            emb = record.get("embedding")
            if emb is None:
                raise DataError(f"missing embedding at id {rid!r}")
            vec = np.asarray(emb, dtype=np.float64)
            if vec.ndim != 1 or vec.size == 0:
                raise DataError(f"embedding at id {rid!r} must be a non-empty vector")
            if dim is None:
                dim = int(vec.size)
            elif vec.size != dim:
                raise DataError(
                    f"dimension mismatch at id {rid!r}: expected {dim}, got {vec.size}"
                )
            if not np.all(np.isfinite(vec)):
                raise DataError(f"non-finite value in embedding at id {rid!r}")
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                raise DataError(f"zero-norm embedding at id {rid!r}")

            text = record.get("text")
            label = record.get("label")
            if text is not None and not isinstance(text, str):
                raise DataError(f"text at id {rid!r} must be a string")
            if label is not None and not isinstance(label, str):
                raise DataError(f"label at id {rid!r} must be a string")

            ids.append(rid)
            texts.append(text)
            labels.append(label)
            extras.append(
                {k: v for k, v in record.items() if k not in ("id", "text", "label", "embedding")}
            )
            rows.append(vec / norm)

        if not rows:
            raise DataError("pool must contain at least one instance")
        matrix = np.ascontiguousarray(np.stack(rows))
        instances = [
            Instance(ids[i], matrix[i], texts[i], labels[i], extras[i])
            for i in range(len(ids))
        ]
        return Pool(instances, matrix)


def load_pool(path: str | Path, format: str = "jsonl", ids_path: str | Path | None = None) -> Pool:
    """Load and validate a pool from a JSONL or binmat file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"pool file not found: {path}")
    if format == "jsonl":
        if ids_path is not None:
            raise DataError("ids_path only applies to the binmat format")
        return Pool.from_records(_iter_jsonl(path))
    if format == "binmat":
        return Pool.from_records(_iter_binmat(path, ids_path))
    raise ConfigError(f"unknown pool format {format!r}")


def _iter_jsonl(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(record, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            yield record


def _iter_binmat(path: Path, ids_path: str | Path | None):
    """binmat: magic 'ANK1', uint32 N, uint32 d (little-endian), N*d float32 rows."""
    raw = path.read_bytes()
    if len(raw) < 12 or raw[:4] != BINMAT_MAGIC:
        raise DataError(f"{path}: not a binmat file (bad magic)")
    n, d = struct.unpack_from("<II", raw, 4)
    expected = 12 + 4 * n * d
    if len(raw) != expected:
        raise DataError(f"{path}: truncated binmat payload (expected {expected} bytes, got {len(raw)})")
    data = np.frombuffer(raw, dtype="<f4", offset=12).reshape(n, d)

    if ids_path is not None:
        id_lines = Path(ids_path).read_text(encoding="utf-8").splitlines()
        ids = [line.strip() for line in id_lines if line.strip()]
        if len(ids) != n:
            raise DataError(f"{ids_path}: {len(ids)} ids for {n} rows")
    else:
        ids = [f"row{i}" for i in range(n)]

    for i in range(n):
        yield {"id": ids[i], "embedding": np.asarray(data[i], dtype=np.float64)}


def save_pool_jsonl(pool: Pool, path: str | Path) -> None:
    """Write a pool back out as JSONL (embeddings as stored, i.e. normalized)."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in pool.instances:
            record: dict[str, object] = {"id": inst.id}
            if inst.text is not None:
                record["text"] = inst.text
            if inst.label is not None:
                record["label"] = inst.label
            record["embedding"] = [float(x) for x in inst.embedding]
            record.update(inst.extras)
            fh.write(json.dumps(record, sort_keys=False) + "\n")


def subsample(pool: Pool, n: int, seed: int) -> Pool:
    """n distinct instances chosen uniformly without replacement (SplitMix64).

    Preserves the original relative order; deterministic for fixed
    (pool, n, seed).
    """
    if n < 1:
        raise ConfigError("subsample size must be >= 1")
    if n > len(pool):
        raise DataError(f"cannot subsample {n} of {len(pool)} instances")
    picked = sorted(SplitMix64(seed).sample_indices(len(pool), n))
    return pool.subset(picked)


@dataclass(frozen=True)
class SelectionConfig:
    """Settings shared by all selectors; see module docstrings for semantics."""

    method: str
    budget: int
    k: int = 150
    rho: float = 10.0
    seed: int = 0
    stage_one_count: Optional[int] = None
    lc_round_size: Optional[int] = None
    single_pass: bool = False

    def __post_init__(self):
        if self.method not in SELECTION_METHODS:
            raise ConfigError(
                f"unknown method {self.method!r}; expected one of {', '.join(SELECTION_METHODS)}"
            )
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not self.rho > 1.0:
            raise ConfigError("rho must be > 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.stage_one_count is not None and self.stage_one_count < 1:
            raise ConfigError("stage_one_count must be >= 1")
        if self.stage_one_count is not None and self.stage_one_count > self.budget:
            raise ConfigError("stage_one_count must be <= budget")
        if self.lc_round_size is not None and self.lc_round_size < 1:
            raise ConfigError("lc_round_size must be >= 1")

    def resolved_stage_one_count(self) -> int:
        """Default: max(1, budget/10 rounded half-up)."""
        if self.stage_one_count is not None:
            return self.stage_one_count
        return max(1, int(self.budget / 10 + 0.5))

    def resolved_lc_round_size(self) -> int:
        if self.lc_round_size is not None:
            return self.lc_round_size
        return self.resolved_stage_one_count()

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "budget": self.budget,
            "k": self.k,
            "rho": self.rho,
            "seed": self.seed,
            "stage_one_count": self.stage_one_count,
            "lc_round_size": self.lc_round_size,
            "single_pass": self.single_pass,
        }

    @staticmethod
    def from_dict(data: Mapping[str, object]) -> "SelectionConfig":
        known = {f: data[f] for f in (
            "method", "budget", "k", "rho", "seed",
            "stage_one_count", "lc_round_size", "single_pass",
        ) if f in data and data[f] is not None}
        return SelectionConfig(**known)  # type: ignore[arg-type]


@dataclass(frozen=True)
class TraceRecord:
    """Why one instance was picked: stage, score at pick time, bucket if any."""

    step: int
    stage: str
    score: Optional[float] = None
    bucket: Optional[int] = None

    def to_dict(self) -> dict:
        return {"step": self.step, "stage": self.stage, "score": self.score, "bucket": self.bucket}


@dataclass(frozen=True)
class SelectionResult:
    method: str
    config: dict
    selected: tuple[str, ...]
    trace: tuple[TraceRecord, ...]

    def __post_init__(self):
        if len(set(self.selected)) != len(self.selected):
            raise DataError("selection contains duplicate ids")
        if len(self.trace) != len(self.selected):
            raise DataError("trace length must equal selection length")
        for i, rec in enumerate(self.trace):
            if rec.step != i:
                raise DataError(f"trace step {rec.step} at position {i}")
            if rec.stage not in TRACE_STAGES:
                raise DataError(f"unknown trace stage {rec.stage!r}")

    def to_json_dict(self) -> dict:
        return {
            "version": RESULT_SCHEMA_VERSION,
            "method": self.method,
            "config": self.config,
            "selected": list(self.selected),
            "trace": [rec.to_dict() for rec in self.trace],
        }


def save_result(result: SelectionResult, path: str | Path) -> None:
    payload = json.dumps(result.to_json_dict(), sort_keys=True, indent=2)
    Path(path).write_text(payload + "\n", encoding="utf-8")


def load_result(path: str | Path) -> SelectionResult:
    path = Path(path)
    if not path.exists():
        raise DataError(f"result file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise DataError(f"{path}: expected a JSON object")
    version = data.get("version")
    if version != RESULT_SCHEMA_VERSION:
        raise DataError(
            f"{path}: schema version mismatch (expected {RESULT_SCHEMA_VERSION}, got {version})"
        )
    try:
        trace = tuple(
            TraceRecord(
                step=int(rec["step"]),
                stage=str(rec["stage"]),
                score=None if rec.get("score") is None else float(rec["score"]),
                bucket=None if rec.get("bucket") is None else int(rec["bucket"]),
            )
            for rec in data["trace"]
        )
        return SelectionResult(
            method=str(data["method"]),
            config=dict(data["config"]),
            selected=tuple(str(s) for s in data["selected"]),
            trace=trace,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed result: {exc}") from None
