"""Thin bridge from real encoders/LM endpoints to annokit's file formats."""

from .embed import embed_texts
from .encoders import HashingEncoder, SentenceTransformerEncoder, get_encoder
from .lmscore import render_prompt, score_pool_remote

__version__ = "0.1.0"

__all__ = [
    "HashingEncoder",
    "SentenceTransformerEncoder",
    "embed_texts",
    "get_encoder",
    "render_prompt",
    "score_pool_remote",
]
