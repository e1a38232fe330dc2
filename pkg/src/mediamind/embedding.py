"""Corpus-independent text embeddings via signed feature hashing.

Each non-stopword token is hashed with 64-bit FNV-1a over its UTF-8 bytes;
the bucket is ``hash % 256`` and the sign comes from bit 63. Signed term
frequencies accumulate per bucket and the vector is L2-normalized. Because
no corpus statistics are involved, a stored vector never needs re-embedding
when the corpus changes.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from .analyzers import tokenize

# FNV-1a 64-bit parameters; fixed so independent implementations agree bit-for-bit.
FNV64_OFFSET = 14695981039346656037
FNV64_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1

DIM = 256


def fnv1a_64(data: bytes) -> int:
    h = FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


def token_bucket(token: str) -> tuple[int, float]:
    """(bucket, sign) for a token: bucket = hash mod 256, sign from bit 63."""
    h = fnv1a_64(token.encode("utf-8"))
    sign = 1.0 if (h >> 63) == 0 else -1.0
    return h % DIM, sign


class Embedder:
    """Embeds text into unit float32 vectors of dimension 256.

    The stopword set is fixed at construction, so ``embed`` is a pure
    function of the text. Empty or all-stopword text maps to the zero vector.
    """

    def __init__(self, stopwords: frozenset[str] = frozenset()):
        self.stopwords = frozenset(stopwords)

    def embed(self, text: str) -> np.ndarray:
        acc = np.zeros(DIM, dtype=np.float64)
        counts = Counter(t for t in tokenize(text) if t not in self.stopwords)
        for token, tf in counts.items():
            bucket, sign = token_bucket(token)
            acc[bucket] += sign * tf
        norm = float(np.linalg.norm(acc))
        if norm == 0.0:
            return np.zeros(DIM, dtype=np.float32)
        return (acc / norm).astype(np.float32)


def is_valid_embedding(vec: np.ndarray) -> bool:
    """Zero vector, or unit L2 norm within 1e-5."""
    if vec.shape != (DIM,):
        return False
    norm = float(np.linalg.norm(vec.astype(np.float64)))
    return norm == 0.0 or abs(norm - 1.0) <= 1e-5
