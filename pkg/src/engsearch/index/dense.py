"""Exact cosine top-k over unit-norm document embeddings.

Exact mode is the contractual baseline: all embeddings are unit-norm so
cosine reduces to a dot product, computed brute-force over a cached
matrix.  An approximate mode slot exists in the manifest for future
graph-based search but is not implemented here.
"""

from __future__ import annotations

import numpy as np

from ..embedding import DocEmbedding
from ..errors import ConflictError, InvalidInputError


class VectorIndex:
    mode = "exact"

    def __init__(self):
        self.entries: dict[str, np.ndarray] = {}
        self._doc_ids: list[str] = []
        self._matrix: np.ndarray | None = None
        self.dim: int | None = None

    def add(self, doc_id: str, embedding: DocEmbedding) -> None:
        if doc_id in self.entries:
            raise ConflictError(f"doc_id already indexed: {doc_id}")
        if self.dim is None:
            self.dim = embedding.dim
        elif embedding.dim != self.dim:
            raise InvalidInputError(
                f"embedding dim {embedding.dim} != index dim {self.dim}"
            )
        self.entries[doc_id] = embedding.vector
        self._matrix = None

    def _ensure_matrix(self):
        if self._matrix is None:
            self._doc_ids = sorted(self.entries)
            self._matrix = (
                np.stack([self.entries[d] for d in self._doc_ids])
                if self._doc_ids
                else np.zeros((0, self.dim or 0))
            )

    def cosine(self, query: DocEmbedding, doc_id: str) -> float:
        return float(np.dot(self.entries[doc_id], query.vector))

    def topk(self, query: DocEmbedding, k: int) -> list[tuple[str, float]]:
        """True cosine top-k, ties broken by lexicographic doc_id."""
        if k < 1:
            raise InvalidInputError(f"k must be >= 1, got {k}")
        if not self.entries:
            return []
        if query.dim != self.dim:
            raise InvalidInputError(f"query dim {query.dim} != index dim {self.dim}")
        self._ensure_matrix()
        scores = self._matrix @ query.vector
        # _doc_ids is sorted, and argsort is stable, so equal scores come
        # out in lexicographic doc_id order.
        order = np.argsort(-scores, kind="stable")[:k]
        return [(self._doc_ids[i], float(scores[i])) for i in order]
