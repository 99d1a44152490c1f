"""Facade over the sparse and dense halves of the store."""

from __future__ import annotations

from ..errors import ConflictError, InvalidInputError
from .dense import VectorIndex
from .entries import DocEntry
from .sparse import InvertedIndex


class HybridIndex:
    """Documents plus both retrieval structures, kept in lockstep.

    Writer contract: one writer xor many readers.  add_document validates
    everything before touching any structure, so a raised error leaves
    the index unchanged.
    """

    def __init__(self, field_weights: dict[str, float] | None = None):
        self.docs: dict[str, DocEntry] = {}
        self.sparse = InvertedIndex(field_weights=field_weights)
        self.dense = VectorIndex()

    def __len__(self) -> int:
        return len(self.docs)

    def add_document(self, entry: DocEntry) -> None:
        if entry.doc_id in self.docs:
            raise ConflictError(f"doc_id already indexed: {entry.doc_id}")
        if self.dense.dim is not None and entry.embedding.dim != self.dense.dim:
            raise InvalidInputError(
                f"embedding dim {entry.embedding.dim} != index dim {self.dense.dim}"
            )
        self.sparse.add(entry.doc_id, entry.fields)
        self.dense.add(entry.doc_id, entry.embedding)
        self.docs[entry.doc_id] = entry

    def get(self, doc_id: str) -> DocEntry:
        return self.docs[doc_id]
