"""Similarity-based retrieval over document memory.

Memory records are scored against the query by dot product of L2-normalized
embeddings (cosine), pushed through a softmax; retrieval picks the argmax.
The built-in embedder is a hashed TF-IDF bag of words: stable across runs
and processes, no model weights required.  A sidecar-backed embedder can be
substituted through the same interface.
"""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import EmptyMemory, ValidationError
from .memory import DocumentMemory, EventRecord

NORM_TOL = 1e-6


@dataclass(frozen=True)
class Embedding:
    values: np.ndarray

    def __post_init__(self):
        norm = float(np.linalg.norm(self.values))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"embedding norm {norm} not within {NORM_TOL} of 1")

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


class Embedder(Protocol):
    dimension: int

    def embed(self, tokens: Sequence[str]) -> Embedding: ...


def _bucket(token: str, dim: int) -> int:
    return zlib.crc32(token.encode("utf-8")) % dim


class HashedTfidfEmbedder:
    """Hashed term-frequency embedder with optional IDF weighting.

    ``fit`` counts document frequencies over a token-list corpus; unseen
    tokens fall back to the max-rarity weight.  Unfitted, all weights are 1
    (plain TF).  Empty input maps to a fixed unit basis vector so every
    embedding stays on the unit sphere.
    """

    def __init__(self, dimension: int = 256):
        if dimension < 1:
            raise ValidationError("embedder dimension must be positive")
        self.dimension = dimension
        self._df: dict[str, int] = {}
        self._n_docs = 0

    def fit(self, corpus: Iterable[Sequence[str]]) -> "HashedTfidfEmbedder":
        for tokens in corpus:
            self._n_docs += 1
            for tok in set(tokens):
                self._df[tok] = self._df.get(tok, 0) + 1
        return self

    def _idf(self, token: str) -> float:
        df = self._df.get(token, 0)
        return float(np.log((1 + self._n_docs) / (1 + df)) + 1.0)

    def embed(self, tokens: Sequence[str]) -> Embedding:
        vec = np.zeros(self.dimension, dtype=np.float64)
        if not tokens:
            vec[0] = 1.0
            return Embedding(vec)
        for tok in tokens:
            vec[_bucket(tok, self.dimension)] += self._idf(tok)
        norm = np.linalg.norm(vec)
        return Embedding(vec / norm)


@lru_cache(maxsize=8)
def _default_embedder(dim: int) -> HashedTfidfEmbedder:
    return HashedTfidfEmbedder(dim)


def embed_default(tokens: Sequence[str], dimension: int = 256) -> Embedding:
    """Embed with an unfitted hashed-TF embedder of the given dimension."""
    return _default_embedder(dimension).embed(tokens)


def _similarities(
    query: Sequence[str], mem: DocumentMemory, embedder: Embedder
) -> np.ndarray:
    q = embedder.embed(query).values
    return np.array(
        [float(q @ embedder.embed(rec.sequence_tokens).values) for rec in mem.records]
    )


def score_memory(
    query: Sequence[str], mem: DocumentMemory, embedder: Embedder
) -> list[tuple[int, float]]:
    """Softmax-normalized relevance of every memory record to the query."""
    if not mem.records:
        raise EmptyMemory("cannot score an empty memory")
    sims = _similarities(query, mem, embedder)
    exp = np.exp(sims - sims.max())
    probs = exp / exp.sum()
    return [(i, float(p)) for i, p in enumerate(probs)]


def retrieve(
    query: Sequence[str], mem: DocumentMemory, embedder: Embedder
) -> EventRecord | None:
    """Most similar record; ties go to the lowest index; None when empty."""
    if not mem.records:
        return None
    sims = _similarities(query, mem, embedder)
    return mem.records[int(np.argmax(sims))]


def retrieve_random(mem: DocumentMemory, seed: int) -> EventRecord | None:
    """Uniform random record, deterministic per seed; None when empty."""
    if not mem.records:
        return None
    return mem.records[random.Random(seed).randrange(len(mem.records))]
