"""Batch cosine-scoring kernels for the index scan.

Two interchangeable implementations: the default numpy path, and a numba
``@njit`` path enabled by setting ``MEDIAMIND_NUMBA=1`` (falls back to numpy
with a warning when numba is not installed). Both compute, per row, the full
cosine ``dot / (|row| * |query|)`` in float64, with zero rows or a zero query
scoring 0. ``benchmarks/bench_search.py`` compares the two.

The numpy path is the default because its arithmetic is reproduced verbatim
by the exact-ranking test oracles; the jit path is checked against it for
identical rankings.
"""

from __future__ import annotations

import logging
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - depends on environment
    numba = None

logger = logging.getLogger(__name__)

_TRUTHY = {"1", "true", "yes", "on"}


def numba_requested() -> bool:
    return os.environ.get("MEDIAMIND_NUMBA", "").strip().lower() in _TRUTHY


def numba_available() -> bool:
    return numba is not None


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two vectors; 0 when either is the zero vector."""
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    na = float(np.linalg.norm(a64))
    nb = float(np.linalg.norm(b64))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a64, b64)) / (na * nb)


def cosine_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Score every row of ``matrix`` against ``query``."""
    if numba_requested():
        if numba_available():
            return _cosine_scores_jit(
                np.ascontiguousarray(matrix, dtype=np.float64),
                np.ascontiguousarray(query, dtype=np.float64),
            )
        logger.warning("MEDIAMIND_NUMBA is set but numba is not installed; using numpy")
    return cosine_scores_numpy(matrix, query)


def cosine_scores_numpy(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    out = np.zeros(matrix.shape[0], dtype=np.float64)
    q = query.astype(np.float64)
    qnorm = float(np.linalg.norm(q))
    if qnorm == 0.0:
        return out
    for i in range(matrix.shape[0]):
        row = matrix[i].astype(np.float64)
        rnorm = float(np.linalg.norm(row))
        if rnorm != 0.0:
            out[i] = float(np.dot(row, q)) / (rnorm * qnorm)
    return out


if numba is not None:

    @numba.njit(cache=True)
    def _jit_scores(matrix, query):  # pragma: no cover - exercised via wrapper
        n, d = matrix.shape
        out = np.zeros(n, dtype=np.float64)
        qsq = 0.0
        for j in range(d):
            qsq += query[j] * query[j]
        qnorm = np.sqrt(qsq)
        if qnorm == 0.0:
            return out
        for i in range(n):
            dot = 0.0
            rsq = 0.0
            for j in range(d):
                v = matrix[i, j]
                dot += v * query[j]
                rsq += v * v
            if rsq > 0.0:
                out[i] = dot / (np.sqrt(rsq) * qnorm)
        return out

    def cosine_scores_jit(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
        return _jit_scores(
            np.ascontiguousarray(matrix, dtype=np.float64),
            np.ascontiguousarray(query, dtype=np.float64),
        )

    _cosine_scores_jit = cosine_scores_jit
else:  # pragma: no cover - depends on environment
    cosine_scores_jit = None
    _cosine_scores_jit = None
