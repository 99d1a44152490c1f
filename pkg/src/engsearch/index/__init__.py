"""Sharded hybrid store: BM25 inverted index + dense vector index."""

from .entries import DocEntry
from .sparse import DEFAULT_FIELD_WEIGHTS, InvertedIndex, tokenize
from .dense import VectorIndex
from .hybrid import HybridIndex
from .store import ShardManifest, LoadedIndex, load_shards, save_shards

__all__ = [
    "DocEntry",
    "InvertedIndex",
    "VectorIndex",
    "HybridIndex",
    "ShardManifest",
    "LoadedIndex",
    "tokenize",
    "save_shards",
    "load_shards",
    "DEFAULT_FIELD_WEIGHTS",
]
