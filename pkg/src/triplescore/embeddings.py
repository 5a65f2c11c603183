"""Pretrained word vectors, weighted centroids and cosine similarity."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import is_entity_token
from .errors import DataFormatError

logger = logging.getLogger(__name__)


class EmbeddingStore:
    """Immutable term -> vector map with a fixed dimension."""

    def __init__(self, dimension: int, vectors: dict[str, np.ndarray]):
        self.dimension = dimension
        self.vectors = vectors

    def __contains__(self, term: str) -> bool:
        return term in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, term: str):
        return self.vectors.get(term)


@dataclass(frozen=True)
class Centroid:
    """Weighted vector sum over a term set; tracks how many terms contributed."""

    values: np.ndarray
    contributing_terms: int


def load_embeddings(path) -> EmbeddingStore:
    """Load a text embedding file: `term v1 v2 ... vD` per line.

    An optional first line `count dim` (two integers) is detected and skipped.
    The dimension is inferred from the first data row; every later row must
    match it. Duplicate terms keep the last row, with a warning.
    """
    vectors: dict[str, np.ndarray] = {}
    dimension = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if dimension is None and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                except ValueError:
                    pass
                else:
                    continue  # header line
            term, raw = parts[0], parts[1:]
            if not raw:
                raise DataFormatError("row has no vector components", path=path, line=lineno)
            try:
                vec = np.array([float(x) for x in raw], dtype=np.float64)
            except ValueError:
                raise DataFormatError(
                    "vector component is not a number", path=path, line=lineno
                ) from None
            if not np.isfinite(vec).all():
                raise DataFormatError("vector has non-finite components", path=path, line=lineno)
            if dimension is None:
                dimension = vec.size
            elif vec.size != dimension:
                raise DataFormatError(
                    f"vector has {vec.size} components, expected {dimension}",
                    path=path,
                    line=lineno,
                )
            if term in vectors:
                logger.warning("%s: line %d: duplicate term %r, last row wins", path, lineno, term)
            vectors[term] = vec
    if dimension is None:
        raise DataFormatError("embedding file has no vector rows", path=path)
    return EmbeddingStore(dimension=dimension, vectors=vectors)


def centroid(store: EmbeddingStore, weighted_terms) -> Centroid:
    """Sum of weight * vec(term) over terms present in the store.

    Terms missing from the store are skipped and do not count as contributing.
    """
    values = np.zeros(store.dimension, dtype=np.float64)
    contributing = 0
    for term, weight in weighted_terms:
        vec = store.get(term)
        if vec is None:
            continue
        values += weight * vec
        contributing += 1
    return Centroid(values=values, contributing_terms=contributing)


def paragraph_centroid(store: EmbeddingStore, tokens, stopwords=frozenset()) -> Centroid:
    """Raw-frequency centroid of a paragraph's repeated content terms.

    Only terms of length >= 4 occurring at least twice contribute, weighted by
    their raw frequency; stopwords and entity tokens are excluded.
    """
    values = np.zeros(store.dimension, dtype=np.float64)
    contributing = 0
    for term, tf in sorted(Counter(tokens).items()):
        if tf < 2 or len(term) < 4:
            continue
        if term in stopwords or is_entity_token(term):
            continue
        vec = store.get(term)
        if vec is None:
            continue
        values += tf * vec
        contributing += 1
    return Centroid(values=values, contributing_terms=contributing)


def cosine(u, v) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm.

    Accepts Centroid objects or plain arrays. Mismatched dimensions are a
    contract violation.
    """
    a = u.values if isinstance(u, Centroid) else np.asarray(u, dtype=np.float64)
    b = v.values if isinstance(v, Centroid) else np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float(np.dot(a, b) / (norm_a * norm_b))
