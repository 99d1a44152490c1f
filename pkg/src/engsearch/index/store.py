"""On-disk shard format.

Layout per shard file (all integers little-endian u32):

    magic "ESHD" | version | shard_id | doc_count | header crc32
    repeated doc sections:
        json_len | json payload | emb_len | float64 embedding bytes | crc32

The crc covers the concatenated json+embedding payloads, so truncation
or bit rot surfaces as a corrupt-index error instead of silent drift.
A JSON manifest ties the shards together and pins the assignment rule,
schema version, embedding dimension, and tokenizer version; loading
refuses manifests whose versions or rule disagree with this build.
"""

from __future__ import annotations

import datetime as _dt
import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..embedding import DocEmbedding
from ..errors import CorruptIndexError
from ..kinds import Kind
from .entries import DocEntry
from .hybrid import HybridIndex
from .sparse import TOKENIZER_VERSION

MAGIC = b"ESHD"
FORMAT_VERSION = 1
SCHEMA_VERSION = 1
ASSIGNMENT_RULE = "crc32_mod"

_U32 = struct.Struct("<I")


def shard_of(doc_id: str, shard_count: int) -> int:
    return zlib.crc32(doc_id.encode("utf-8")) % shard_count


@dataclass
class ShardManifest:
    shard_count: int
    embedding_dim: int
    shards: list[dict] = field(default_factory=list)
    assignment_rule: str = ASSIGNMENT_RULE
    schema_version: int = SCHEMA_VERSION
    format_version: int = FORMAT_VERSION
    tokenizer_version: str = TOKENIZER_VERSION
    field_weights: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "format_version": self.format_version,
            "assignment_rule": self.assignment_rule,
            "tokenizer_version": self.tokenizer_version,
            "shard_count": self.shard_count,
            "embedding_dim": self.embedding_dim,
            "field_weights": self.field_weights,
            "shards": self.shards,
        }


def _entry_payload(entry: DocEntry) -> bytes:
    doc = {
        "doc_id": entry.doc_id,
        "kind": entry.kind.value,
        "fields": entry.fields,
        "metadata": entry.meta_to_json(),
        "dup_key": entry.dup_key,
        "date": entry.date.isoformat() if entry.date else None,
        "quality": entry.quality,
        "thumbnail_ref": entry.thumbnail_ref,
    }
    return json.dumps(doc, sort_keys=True).encode("utf-8")


def _entry_from_payload(payload: bytes, emb: np.ndarray) -> DocEntry:
    doc = json.loads(payload.decode("utf-8"))
    return DocEntry(
        doc_id=doc["doc_id"],
        kind=Kind(doc["kind"]),
        fields=doc["fields"],
        metadata=DocEntry.meta_from_json(doc["metadata"]),
        embedding=DocEmbedding(vector=emb),
        dup_key=doc["dup_key"],
        date=_dt.date.fromisoformat(doc["date"]) if doc["date"] else None,
        quality=doc["quality"],
        thumbnail_ref=doc.get("thumbnail_ref"),
    )


def _write_shard(path: Path, shard_id: int, entries: list[DocEntry]) -> None:
    with open(path, "wb") as fh:
        head = _U32.pack(FORMAT_VERSION) + _U32.pack(shard_id) + _U32.pack(len(entries))
        fh.write(MAGIC + head + _U32.pack(zlib.crc32(head)))
        for entry in entries:
            payload = _entry_payload(entry)
            emb = np.ascontiguousarray(entry.embedding.vector, dtype="<f8").tobytes()
            fh.write(_U32.pack(len(payload)))
            fh.write(payload)
            fh.write(_U32.pack(len(emb)))
            fh.write(emb)
            fh.write(_U32.pack(zlib.crc32(payload + emb)))


def _read_exact(fh, n: int, shard: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CorruptIndexError(f"{shard}: truncated (wanted {n} bytes, got {len(data)})")
    return data


def _read_shard(path: Path) -> tuple[int, list[DocEntry]]:
    shard = path.name
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, shard) != MAGIC:
            raise CorruptIndexError(f"{shard}: bad magic")
        head = _read_exact(fh, 12, shard)
        (crc,) = _U32.unpack(_read_exact(fh, 4, shard))
        if crc != zlib.crc32(head):
            raise CorruptIndexError(f"{shard}: header checksum mismatch")
        version, shard_id, doc_count = struct.unpack("<III", head)
        if version != FORMAT_VERSION:
            raise CorruptIndexError(
                f"{shard}: format version {version} != {FORMAT_VERSION}"
            )
        entries = []
        for _ in range(doc_count):
            (json_len,) = _U32.unpack(_read_exact(fh, 4, shard))
            payload = _read_exact(fh, json_len, shard)
            (emb_len,) = _U32.unpack(_read_exact(fh, 4, shard))
            emb_bytes = _read_exact(fh, emb_len, shard)
            (crc,) = _U32.unpack(_read_exact(fh, 4, shard))
            if crc != zlib.crc32(payload + emb_bytes):
                raise CorruptIndexError(f"{shard}: section checksum mismatch")
            emb = np.frombuffer(emb_bytes, dtype="<f8").astype(np.float64)
            entries.append(_entry_from_payload(payload, emb))
        if fh.read(1):
            raise CorruptIndexError(f"{shard}: trailing bytes after last section")
    return shard_id, entries


def save_shards(
    index: HybridIndex, path: str | Path, shard_count: int = 4
) -> ShardManifest:
    """Write the index under `path`; returns the manifest also written there."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    buckets: list[list[DocEntry]] = [[] for _ in range(shard_count)]
    for doc_id in sorted(index.docs):
        buckets[shard_of(doc_id, shard_count)].append(index.docs[doc_id])

    manifest = ShardManifest(
        shard_count=shard_count,
        embedding_dim=index.dense.dim or 0,
        field_weights=index.sparse.field_weights,
    )
    for shard_id, entries in enumerate(buckets):
        name = f"shard_{shard_id:03d}.bin"
        _write_shard(root / name, shard_id, entries)
        manifest.shards.append({"path": name, "doc_count": len(entries)})
    with open(root / "manifest.json", "w") as fh:
        json.dump(manifest.to_json(), fh, indent=2, sort_keys=True)
    return manifest


@dataclass
class LoadedIndex:
    index: HybridIndex
    manifest: ShardManifest
    corrupt_shards: list[str] = field(default_factory=list)


def load_shards(path: str | Path, skip_corrupt: bool = False) -> LoadedIndex:
    """Rebuild an index from shards; raises on corruption unless skipping.

    With ``skip_corrupt`` the healthy shards still load and the corrupt
    ones are reported on the result.
    """
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise CorruptIndexError(f"missing manifest: {manifest_path}")
    with open(manifest_path) as fh:
        raw = json.load(fh)

    if raw.get("assignment_rule") != ASSIGNMENT_RULE:
        raise CorruptIndexError(
            f"unsupported shard assignment rule: {raw.get('assignment_rule')!r}"
        )
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise CorruptIndexError(f"schema version mismatch: {raw.get('schema_version')}")
    if raw.get("format_version") != FORMAT_VERSION:
        raise CorruptIndexError(f"format version mismatch: {raw.get('format_version')}")
    if raw.get("tokenizer_version") != TOKENIZER_VERSION:
        raise CorruptIndexError(
            f"tokenizer version mismatch: {raw.get('tokenizer_version')!r}"
        )

    manifest = ShardManifest(
        shard_count=int(raw["shard_count"]),
        embedding_dim=int(raw["embedding_dim"]),
        shards=list(raw["shards"]),
        field_weights={k: float(v) for k, v in raw.get("field_weights", {}).items()},
    )
    index = HybridIndex(field_weights=manifest.field_weights or None)
    corrupt: list[str] = []
    for meta in manifest.shards:
        shard_path = root / meta["path"]
        try:
            shard_id, entries = _read_shard(shard_path)
            for entry in entries:
                if shard_of(entry.doc_id, manifest.shard_count) != shard_id:
                    raise CorruptIndexError(
                        f"{shard_path.name}: {entry.doc_id} violates the "
                        "assignment rule"
                    )
                index.add_document(entry)
        except CorruptIndexError as exc:
            if not skip_corrupt:
                raise
            corrupt.append(str(exc))
    return LoadedIndex(index=index, manifest=manifest, corrupt_shards=corrupt)
