"""Ingestion pipeline: extraction records in, indexed documents out.

Each record is routed (drawing vs document), parsed into structured
metadata, embedded, and added to the hybrid index. Kept separate from
the CLI so the service, the corpus generator, and tests all build
entries the same way.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable

from .embedding import (
    EncoderClient,
    ProjectionConfig,
    StubEncoderClient,
    embed_document,
    region_features,
)
from .errors import ConflictError
from .extraction import (
    ClassifierClient,
    ExtractionRecord,
    classify_document,
    near_duplicate_key,
    parse_document_fields,
    parse_drawing_fields,
)
from .index import DocEntry, HybridIndex
from .kinds import DocClass, Kind, RegionKind
from .routing import RouterModel, RoutingDecision, score_logit

# Free parameters of the router: the feature coefficients are pinned to
# the fitted operating point, while the intercept stays a deployment
# knob (it shifts the Drawing/Document cutoff without retraining).
DEFAULT_ROUTER = RouterModel(
    alpha=-3.0,
    beta_clip=5.91,
    beta_heur=-0.81,
    beta_cad=0.0,
    beta_int=2.21,
    threshold=0.5,
)


@dataclass
class IngestStats:
    docs: int = 0
    drawings: int = 0
    documents: int = 0
    skipped: int = 0
    seconds: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def ms_per_doc(self) -> float:
        return 1000.0 * self.seconds / self.docs if self.docs else 0.0


# Leading words that mark labeled rows of a title block; the title line
# is the first row that does not start with one.
_LABEL_WORDS = {
    "DWG", "DRAWING", "NO", "NUMBER", "SIZE", "SHEET",
    "FACILITY", "REV", "REVISION", "DATE", "SCALE",
}


def _drawing_title(regions: list) -> str:
    for region in regions:
        if region.kind is not RegionKind.DATA_BLOCK:
            continue
        for line in region.text.splitlines():
            words = line.split()
            if not words:
                continue
            if words[0].upper().rstrip(".:") in _LABEL_WORDS:
                continue
            return line.strip()
    return ""


def record_to_entry(
    record: ExtractionRecord,
    decision: RoutingDecision,
    encoder: EncoderClient,
    projection: ProjectionConfig,
    classifier: ClassifierClient | None = None,
) -> DocEntry:
    """Build one indexable entry from a validated record."""
    if decision.label is Kind.DRAWING:
        meta = parse_drawing_fields(record.regions)
        fields = {
            "full_text": record.full_text,
            "title": _drawing_title(record.regions),
            "drawing_number": meta.drawing_number or "",
            "parts": " ".join(
                f"{pid} {desc}" for pid, desc, _ in meta.parts
            ),
            "revisions": " ".join(
                r.text for r in record.regions if r.kind is RegionKind.REVISIONS_BLOCK
            ),
        }
    else:
        doc_class = record.doc_class or DocClass.OTHER
        if record.doc_class is None and classifier is not None:
            doc_class = classify_document(record.full_text, classifier).doc_class
        meta = parse_document_fields(record.full_text, doc_class)
        fields = {
            "full_text": record.full_text,
            "title": meta.title,
            "sections": " ".join(meta.section_headings),
        }

    text_emb = encoder.encode(record.embedding_text)
    embedding = embed_document(text_emb, region_features(record), projection)
    return DocEntry(
        doc_id=record.file_id,
        kind=decision.label,
        fields={k: v for k, v in fields.items() if v},
        metadata=meta,
        embedding=embedding,
        dup_key=near_duplicate_key(meta, record.file_id),
        date=record.date,
        quality=record.quality,
        thumbnail_ref=record.thumbnail_ref,
    )


def ingest_records(
    records: Iterable[ExtractionRecord],
    router: RouterModel | None = None,
    encoder: EncoderClient | None = None,
    projection: ProjectionConfig | None = None,
    classifier: ClassifierClient | None = None,
    index: HybridIndex | None = None,
) -> tuple[HybridIndex, IngestStats]:
    """Route, parse, embed, and index a stream of records."""
    router = router or DEFAULT_ROUTER
    encoder = encoder or StubEncoderClient()
    projection = projection or ProjectionConfig.default(encoder.dim)
    index = index if index is not None else HybridIndex()
    stats = IngestStats()
    start = time.perf_counter()
    for record in records:
        decision = score_logit(record.kind_features, router)
        entry = record_to_entry(record, decision, encoder, projection, classifier)
        try:
            index.add_document(entry)
        except ConflictError:
            stats.skipped += 1
            stats.warnings.append(f"duplicate doc_id skipped: {entry.doc_id}")
            continue
        stats.docs += 1
        if decision.label is Kind.DRAWING:
            stats.drawings += 1
        else:
            stats.documents += 1
    stats.seconds = time.perf_counter() - start
    return index, stats
