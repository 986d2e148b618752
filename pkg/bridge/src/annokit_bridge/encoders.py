"""Text encoders behind one tiny interface: encode(list[str]) -> (n, d) array.

``hash:<dim>`` is a deterministic feature-hashing bag-of-words encoder with
no model dependency: every platform produces identical vectors, which is what
the tests (and any air-gapped run) use.  ``st:<model>`` wraps
sentence-transformers and is imported lazily so the bridge works without it.
"""

from __future__ import annotations

import hashlib

import numpy as np


class EncoderError(Exception):
    pass


class HashingEncoder:
    """sha256 feature hashing of whitespace tokens, L2-normalized."""

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise EncoderError("hash encoder dimension must be >= 1")
        self.dim = dim
        self.name = f"hash:{dim}"

    def _vector(self, text: str) -> np.ndarray:
        tokens = text.split()
        if not tokens:
            raise EncoderError("empty text")
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            index = int.from_bytes(digest[:8], "little") % self.dim
            sign = 1.0 if digest[8] & 1 else -1.0
            vec[index] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:  # opposing tokens cancelled every bucket
            vec[int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")
                % self.dim] = 1.0
            norm = 1.0
        return vec / norm

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.stack([self._vector(t) for t in texts])


class SentenceTransformerEncoder:
    """Real sentence encoder; requires the model to be installed/cached."""

    def __init__(self, model_name: str, batch_size: int = 32):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EncoderError(
                "sentence-transformers is not installed; "
                "pip install 'annokit-bridge[st]'"
            ) from exc
        try:
            self.model = SentenceTransformer(model_name)
        except Exception as exc:
            raise EncoderError(f"failed to load encoder {model_name!r}: {exc}") from exc
        self.batch_size = batch_size
        self.name = f"st:{model_name}"

    def encode(self, texts: list[str]) -> np.ndarray:
        for text in texts:
            if not text.strip():
                raise EncoderError("empty text")
        vectors = self.model.encode(
            texts, batch_size=self.batch_size, show_progress_bar=False,
            convert_to_numpy=True,
        )
        return np.asarray(vectors, dtype=np.float64)


def get_encoder(spec: str, batch_size: int = 32):
    """``hash:<dim>`` or ``st:<model-name>`` (default hash:256)."""
    if spec.startswith("hash:"):
        return HashingEncoder(int(spec.split(":", 1)[1]))
    if spec == "hash":
        return HashingEncoder()
    if spec.startswith("st:"):
        return SentenceTransformerEncoder(spec.split(":", 1)[1], batch_size)
    raise EncoderError(f"unknown encoder spec {spec!r} (use hash:<dim> or st:<model>)")
