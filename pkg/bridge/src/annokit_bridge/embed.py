"""texts JSONL -> embedding pool file in the formats annokit ingests.

The output contract is the whole point of this module: JSONL lines of
{id, text, label?, embedding} with constant dimensionality, or a binmat
blob (magic ANK1, uint32 N, uint32 d, float32 rows) plus a sidecar id file.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .encoders import EncoderError, get_encoder


class InputError(Exception):
    pass


def read_texts(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(record, dict) or "id" not in record or "text" not in record:
                raise InputError(f"{path}:{lineno}: every line needs id and text")
            if not isinstance(record["text"], str) or not record["text"].strip():
                raise InputError(f"{path}:{lineno}: empty text for id {record['id']!r}")
            records.append(record)
    if not records:
        raise InputError(f"{path}: no input records")
    return records


def embed_texts(
    in_path: str | Path,
    out_path: str | Path,
    encoder_spec: str = "hash:256",
    out_format: str = "jsonl",
    ids_out: str | Path | None = None,
    batch_size: int = 32,
) -> int:
    """Encode every text and write a pool file; returns the instance count."""
    records = read_texts(in_path)
    encoder = get_encoder(encoder_spec, batch_size=batch_size)

    vectors = []
    for start in range(0, len(records), batch_size):
        chunk = [r["text"] for r in records[start:start + batch_size]]
        vectors.append(encoder.encode(chunk))
    matrix = np.concatenate(vectors, axis=0)
    if matrix.shape[0] != len(records):
        raise EncoderError("encoder returned a wrong number of vectors")

    if out_format == "jsonl":
        with open(out_path, "w", encoding="utf-8") as fh:
            for record, row in zip(records, matrix):
                line: dict = {"id": record["id"], "text": record["text"]}
                if "label" in record:
                    line["label"] = record["label"]
                line["embedding"] = [float(x) for x in row]
                fh.write(json.dumps(line) + "\n")
    elif out_format == "binmat":
        data = matrix.astype("<f4")
        with open(out_path, "wb") as fh:
            fh.write(b"ANK1" + struct.pack("<II", *data.shape) + data.tobytes())
        if ids_out is not None:
            Path(ids_out).write_text(
                "\n".join(str(r["id"]) for r in records) + "\n", encoding="utf-8"
            )
    else:
        raise InputError(f"unknown output format {out_format!r}")
    return len(records)
