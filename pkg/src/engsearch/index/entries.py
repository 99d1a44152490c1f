"""The indexed unit and its JSON round-trip."""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field

from ..embedding import DocEmbedding
from ..extraction import DocumentMetadata, DrawingMetadata
from ..kinds import DocClass, Kind


@dataclass
class DocEntry:
    """One indexed file: normalized text fields, metadata, embedding."""

    doc_id: str
    kind: Kind
    fields: dict[str, str]
    metadata: DrawingMetadata | DocumentMetadata
    embedding: DocEmbedding
    dup_key: str
    date: _dt.date | None = None
    quality: float = 0.5
    thumbnail_ref: str | None = None

    @property
    def title(self) -> str:
        if isinstance(self.metadata, DocumentMetadata) and self.metadata.title:
            return self.metadata.title
        if isinstance(self.metadata, DrawingMetadata) and self.metadata.drawing_number:
            return self.metadata.drawing_number
        return self.doc_id

    def meta_to_json(self) -> dict:
        m = self.metadata
        if isinstance(m, DrawingMetadata):
            return {
                "type": "drawing",
                "drawing_number": m.drawing_number,
                "revision": m.revision,
                "facility_tag": m.facility_tag,
                "sheet": list(m.sheet) if m.sheet else None,
                "parts": [list(p) for p in m.parts],
                "size_code": m.size_code,
                "incomplete": m.incomplete,
            }
        return {
            "type": "document",
            "doc_class": m.doc_class.value,
            "doc_id": m.doc_id,
            "title": m.title,
            "section_headings": list(m.section_headings),
            "steps": list(m.steps) if m.steps is not None else None,
        }

    @staticmethod
    def meta_from_json(raw: dict) -> DrawingMetadata | DocumentMetadata:
        if raw.get("type") == "drawing":
            return DrawingMetadata(
                drawing_number=raw.get("drawing_number"),
                revision=raw.get("revision"),
                facility_tag=raw.get("facility_tag"),
                sheet=tuple(raw["sheet"]) if raw.get("sheet") else None,
                parts=[tuple(p) for p in raw.get("parts", [])],
                size_code=raw.get("size_code"),
                incomplete=bool(raw.get("incomplete", False)),
            )
        return DocumentMetadata(
            doc_class=DocClass(raw.get("doc_class", "Other")),
            doc_id=raw.get("doc_id"),
            title=raw.get("title", ""),
            section_headings=list(raw.get("section_headings", [])),
            steps=list(raw["steps"]) if raw.get("steps") is not None else None,
        )
