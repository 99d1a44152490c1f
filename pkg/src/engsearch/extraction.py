"""Ingestion of upstream extractor output into index-ready records.

Upstream vision/OCR/classifier models emit one JSON object per file:
routing signals, region-restricted OCR text for the four canonical
drawing regions, full-page text, and assorted optional metadata.  This
module validates those objects, normalizes text and identifiers, parses
structured drawing/document metadata from region text, and derives the
keys used to collapse near-duplicate revisions at evaluation time.
"""

from __future__ import annotations

import datetime as _dt
import json
import re
from dataclasses import dataclass, field, replace

from .errors import InvalidInputError, SchemaError
from .kinds import DocClass, RegionKind
from .routing import RoutingFeatures, combine_heuristics

SCHEMA_VERSION = 1

# Unicode dash family mapped onto plain "-".
_DASHES = "‐‑‒–—―−"
_DASH_TABLE = str.maketrans({c: "-" for c in _DASHES})
_WS_RUN = re.compile(r"\s+")


def normalize_text(s: str) -> str:
    """Case-fold and canonicalize punctuation/whitespace.

    Lowercases, maps all dash variants to "-", collapses whitespace runs
    to single spaces, and strips the ends.  Idempotent.
    """
    s = s.translate(_DASH_TABLE).lower()
    return _WS_RUN.sub(" ", s).strip()


def normalize_identifier(s: str) -> str:
    """Canonical identifier form: uppercase, unified dash, no whitespace."""
    s = s.translate(_DASH_TABLE).upper()
    return _WS_RUN.sub("", s)


@dataclass(frozen=True)
class RegionExtraction:
    kind: RegionKind
    text: str
    confidence: float = 1.0
    bbox: tuple[float, float, float, float] | None = None


@dataclass
class ExtractionRecord:
    """Validated per-file ingestion payload (schema_version 1)."""

    file_id: str
    kind_features: RoutingFeatures
    regions: list[RegionExtraction] = field(default_factory=list)
    full_text: str = ""
    doc_class: DocClass | None = None
    date: _dt.date | None = None
    quality: float = 0.5
    embedding_text: str = ""
    thumbnail_ref: str | None = None

    def to_json(self) -> dict:
        kf = {
            "p_draw": self.kind_features.p_draw,
            "h": self.kind_features.heuristic,
            "cad_prior": self.kind_features.cad_prior,
        }
        if self.kind_features.sub_scores is not None:
            kf["b"], kf["edge"], kf["lines"] = self.kind_features.sub_scores
        out = {
            "schema_version": SCHEMA_VERSION,
            "file_id": self.file_id,
            "kind_features": kf,
            "regions": [
                {
                    "kind": r.kind.value,
                    "text": r.text,
                    "confidence": r.confidence,
                    **({"bbox": list(r.bbox)} if r.bbox is not None else {}),
                }
                for r in self.regions
            ],
            "full_text": self.full_text,
            "quality": self.quality,
            "embedding_text": self.embedding_text,
        }
        if self.doc_class is not None:
            out["doc_class"] = self.doc_class.value
        if self.date is not None:
            out["date"] = self.date.isoformat()
        if self.thumbnail_ref is not None:
            out["thumbnail_ref"] = self.thumbnail_ref
        return out


def _unit_field(raw: object, name: str) -> float:
    try:
        value = float(raw)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise SchemaError(name, f"expected a number, got {raw!r}")
    if not 0.0 <= value <= 1.0:
        raise SchemaError(name, f"must be in [0, 1], got {value}")
    return value


def _parse_kind_features(raw: object) -> RoutingFeatures:
    if not isinstance(raw, dict):
        raise SchemaError("kind_features", "expected an object")
    if "p_draw" not in raw:
        raise SchemaError("kind_features.p_draw", "required")
    if "h" not in raw:
        raise SchemaError("kind_features.h", "required")
    p = _unit_field(raw["p_draw"], "kind_features.p_draw")
    cad = raw.get("cad_prior", 0)
    if cad not in (0, 1):
        raise SchemaError("kind_features.cad_prior", f"must be 0 or 1, got {cad!r}")
    sub = None
    if all(k in raw for k in ("b", "edge", "lines")):
        sub = (
            _unit_field(raw["b"], "kind_features.b"),
            _unit_field(raw["edge"], "kind_features.edge"),
            _unit_field(raw["lines"], "kind_features.lines"),
        )
        h = combine_heuristics(*sub)
    else:
        h = _unit_field(raw["h"], "kind_features.h")
    return RoutingFeatures(p_draw=p, heuristic=h, cad_prior=int(cad), sub_scores=sub)


def _parse_region(raw: object, where: str) -> RegionExtraction:
    if not isinstance(raw, dict):
        raise SchemaError(where, "expected an object")
    kind_raw = raw.get("kind")
    try:
        kind = RegionKind(kind_raw)
    except ValueError:
        allowed = ", ".join(k.value for k in RegionKind)
        raise SchemaError(f"{where}.kind", f"{kind_raw!r} not one of: {allowed}")
    confidence = _unit_field(raw.get("confidence", 1.0), "confidence")
    bbox = None
    if raw.get("bbox") is not None:
        vals = raw["bbox"]
        if not isinstance(vals, (list, tuple)) or len(vals) != 4:
            raise SchemaError(f"{where}.bbox", "expected [x, y, w, h]")
        x, y, w, h = (_unit_field(v, f"{where}.bbox") for v in vals)
        if w <= 0 or h <= 0:
            raise SchemaError(f"{where}.bbox", "w and h must be > 0")
        bbox = (x, y, w, h)
    return RegionExtraction(
        kind=kind, text=str(raw.get("text", "")), confidence=confidence, bbox=bbox
    )


def validate_record(raw: dict | str) -> ExtractionRecord:
    """Validate one ingestion object and apply defaults.

    Unknown fields are ignored; schema violations raise
    :class:`SchemaError` naming the offending field.
    """
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaError("<document>", f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("<document>", "expected a JSON object")

    file_id = raw.get("file_id")
    if not isinstance(file_id, str) or not file_id:
        raise SchemaError("file_id", "required non-empty string")

    features = _parse_kind_features(raw.get("kind_features"))

    regions = [
        _parse_region(r, f"regions[{i}]") for i, r in enumerate(raw.get("regions", []))
    ]

    full_text = raw.get("full_text", "")
    if not isinstance(full_text, str):
        raise SchemaError("full_text", "expected a string")

    doc_class = None
    if raw.get("doc_class") is not None:
        try:
            doc_class = DocClass(raw["doc_class"])
        except ValueError:
            allowed = ", ".join(c.value for c in DocClass)
            raise SchemaError("doc_class", f"{raw['doc_class']!r} not one of: {allowed}")

    date = None
    if raw.get("date") is not None:
        try:
            date = _dt.date.fromisoformat(str(raw["date"]))
        except ValueError:
            raise SchemaError("date", f"not an ISO-8601 date: {raw['date']!r}")

    if raw.get("quality") is not None:
        quality = _unit_field(raw["quality"], "quality")
    elif regions:
        quality = sum(r.confidence for r in regions) / len(regions)
    else:
        quality = 0.5

    embedding_text = raw.get("embedding_text") or " ".join(
        t for t in [full_text, *(r.text for r in regions)] if t
    )

    thumbnail_ref = raw.get("thumbnail_ref")
    if thumbnail_ref is not None and not isinstance(thumbnail_ref, str):
        raise SchemaError("thumbnail_ref", "expected a string")

    return ExtractionRecord(
        file_id=file_id,
        kind_features=features,
        regions=regions,
        full_text=full_text,
        doc_class=doc_class,
        date=date,
        quality=quality,
        embedding_text=embedding_text,
        thumbnail_ref=thumbnail_ref,
    )


# ----------------------------------------------------------------------
# Drawing metadata

# Tokens that label identifier fields but are never identifiers themselves.
_LABEL_WORDS = {"DWG", "NO", "DRAWING", "NUMBER", "SHEET", "REV", "SIZE", "OF", "SH"}
_ID_TOKEN = re.compile(r"[A-Z0-9][A-Z0-9-]+")
_FALLBACK_ID = re.compile(r"[A-Z0-9]{2,}[- ]?[A-Z0-9]+")
_REV_TOKEN = re.compile(r"^([A-Z]{1,2}|[0-9]{1,3})\b")
_SHEET = re.compile(r"\bSHEET\s+(\d+)\s+OF\s+(\d+)\b")
_SIZE = re.compile(r"\bSIZE[:\s]+([A-E])\b")
_CELL_SPLIT = re.compile(r"\t+| {2,}")

DEFAULT_FACILITY_PATTERNS = (r"\b[A-Z]\d[A-Z]\d{4}\b", r"\bTG:[A-Z0-9]+\b")


@dataclass
class DrawingMetadata:
    drawing_number: str | None = None
    revision: str | None = None
    facility_tag: str | None = None
    sheet: tuple[int, int] | None = None
    parts: list[tuple[str, str, int]] = field(default_factory=list)
    size_code: str | None = None
    incomplete: bool = False


@dataclass
class DocumentMetadata:
    doc_class: DocClass = DocClass.OTHER
    doc_id: str | None = None
    title: str = ""
    section_headings: list[str] = field(default_factory=list)
    steps: list[str] | None = None


def _best_id_token(canonical: str, pattern: re.Pattern) -> str | None:
    tokens = [t for t in pattern.findall(canonical) if t not in _LABEL_WORDS]
    if not tokens:
        return None
    # Prefer mixed letter+digit identifiers, then longer, then textual order.
    def rank(tok: str):
        mixed = any(c.isdigit() for c in tok) and any(c.isalpha() for c in tok)
        has_digit = any(c.isdigit() for c in tok)
        return (mixed, has_digit, len(tok))

    best = max(tokens, key=rank)
    return normalize_identifier(best)


def _rev_scheme(token: str) -> str:
    return "numeric" if token.isdigit() else "letter"


def revision_sort_key(token: str) -> tuple:
    """Orderable key for revision tokens across documents.

    Letters rank by (length, value) so Z < AA; numeric revisions rank
    above any letter, matching archives that restart numbering after
    the alphabetic era.
    """
    if token.isdigit():
        return (1, int(token), "")
    return (0, len(token), token)


def _latest_revision(tokens: list[str]) -> str | None:
    """Latest revision under the mixed-scheme rule.

    Same scheme compares by value (numeric by int, letters by rank);
    across schemes the later document-order entry wins.
    """
    latest = None
    for tok in tokens:
        if latest is None:
            latest = tok
            continue
        if _rev_scheme(tok) != _rev_scheme(latest):
            latest = tok  # later in document order
        elif _rev_scheme(tok) == "numeric":
            if int(tok) > int(latest):
                latest = tok
        elif (len(tok), tok) > (len(latest), latest):
            latest = tok
    return latest


def _parse_parts_rows(text: str) -> list[tuple[str, str, int]]:
    parts = []
    for line in text.splitlines():
        line = line.rstrip()
        if not line.strip() or not any(c.isdigit() for c in line):
            continue  # blank or header row
        cells = [c.strip() for c in _CELL_SPLIT.split(line) if c.strip()]
        if len(cells) < 2:
            cells = line.split()
        quantity = 1
        qty_idx = None
        for i, cell in enumerate(cells):
            if cell.isdigit():
                quantity = int(cell)
                qty_idx = i
                break
        rest = [c for i, c in enumerate(cells) if i != qty_idx]
        if not rest:
            continue
        part_id = None
        for cell in rest:
            tok = normalize_identifier(cell)
            if any(c.isdigit() for c in tok) and any(c.isalpha() for c in tok):
                part_id = tok
                break
        if part_id is None:
            part_id = normalize_identifier(rest[0])
        description = " ".join(c for c in rest if normalize_identifier(c) != part_id)
        parts.append((part_id, description, max(quantity, 1)))
    return parts


def parse_drawing_fields(
    regions: list[RegionExtraction],
    facility_patterns: tuple[str, ...] = DEFAULT_FACILITY_PATTERNS,
) -> DrawingMetadata:
    """Parse structured drawing metadata out of validated region text.

    The drawing number comes from the drawing-number region, falling back
    to an identifier scan of the data block; the revision is the latest
    entry of the revisions block; parts are parsed row-wise.  A missing
    drawing number sets ``incomplete`` instead of raising so the record
    stays indexable.
    """
    by_kind: dict[RegionKind, list[str]] = {}
    for r in regions:
        by_kind.setdefault(r.kind, []).append(r.text)

    meta = DrawingMetadata()

    number_text = " ".join(by_kind.get(RegionKind.DRAWING_NUMBER, []))
    if number_text.strip():
        canonical = normalize_identifier(number_text)
        spaced = number_text.translate(_DASH_TABLE).upper()
        meta.drawing_number = _best_id_token(spaced, _ID_TOKEN) or canonical

    data_text = "\n".join(by_kind.get(RegionKind.DATA_BLOCK, []))
    data_upper = data_text.translate(_DASH_TABLE).upper()
    if meta.drawing_number is None and data_text.strip():
        meta.drawing_number = _best_id_token(data_upper, _FALLBACK_ID)

    if meta.drawing_number is None:
        meta.incomplete = True

    rev_tokens = []
    for text in by_kind.get(RegionKind.REVISIONS_BLOCK, []):
        for line in text.splitlines():
            stripped = line.strip().translate(_DASH_TABLE).upper()
            m = _REV_TOKEN.match(stripped)
            if m:
                rev_tokens.append(m.group(1))
    meta.revision = _latest_revision(rev_tokens)

    m = _SHEET.search(data_upper)
    if m:
        meta.sheet = (int(m.group(1)), int(m.group(2)))
    m = _SIZE.search(data_upper)
    if m:
        meta.size_code = m.group(1)
    for pat in facility_patterns:
        m = re.search(pat, data_upper)
        if m:
            meta.facility_tag = normalize_identifier(m.group(0))
            break

    for text in by_kind.get(RegionKind.PARTS_LIST, []):
        meta.parts.extend(_parse_parts_rows(text))
    return meta


_DOC_ID = re.compile(r"\b[A-Z]{2,}-[A-Z0-9][A-Z0-9.\-]*\b")
_STEP_LINE = re.compile(r"^\s*(\d+)[.)]\s+(.+)$")


def parse_document_fields(
    full_text: str, doc_class: DocClass = DocClass.OTHER
) -> DocumentMetadata:
    """Light structural parse of a policy/procedure text body."""
    lines = [ln.strip() for ln in full_text.splitlines()]
    lines = [ln for ln in lines if ln]
    title = lines[0] if lines else ""

    doc_id = None
    m = _DOC_ID.search(full_text.translate(_DASH_TABLE).upper())
    if m:
        doc_id = normalize_identifier(m.group(0))

    headings = []
    steps = []
    for ln in lines[1:]:
        sm = _STEP_LINE.match(ln)
        if sm:
            steps.append(sm.group(2))
        elif len(ln) < 80 and (ln.endswith(":") or ln.isupper()):
            headings.append(ln.rstrip(":"))
    return DocumentMetadata(
        doc_class=doc_class,
        doc_id=doc_id,
        title=title,
        section_headings=headings,
        steps=steps if (steps and doc_class == DocClass.PROCEDURE) else None,
    )


def near_duplicate_key(meta: DrawingMetadata | DocumentMetadata, file_id: str) -> str:
    """Key under which successive revisions of the same item collapse.

    Drawings share a key when their normalized drawing numbers match
    (revision ignored); documents when their doc ids match.  Anything
    else falls back to the file id, which never merges.
    """
    if isinstance(meta, DrawingMetadata):
        if meta.drawing_number:
            return f"dwg::{meta.drawing_number}"
        return file_id
    if meta.doc_id:
        return f"doc::{meta.doc_id}"
    return file_id


# ----------------------------------------------------------------------
# Document classification (external client)

CLASSIFY_MAX_CHARS = 8_000
CLASSIFY_MAX_PAGES = 5


@dataclass(frozen=True)
class ClassificationResult:
    doc_class: DocClass
    truncated_len: int
    pending: bool = False


def truncate_for_classification(
    text: str,
    max_pages: int = CLASSIFY_MAX_PAGES,
    max_chars: int = CLASSIFY_MAX_CHARS,
) -> str:
    """First ``max_pages`` form-feed pages, capped at ``max_chars`` chars."""
    if "\f" in text:
        text = "\f".join(text.split("\f")[:max_pages])
    return text[:max_chars]


class ClassifierClient:
    """Protocol for the external document classifier: classify(text) -> str."""

    def classify(self, text: str) -> str:  # pragma: no cover - interface only
        raise NotImplementedError


class KeywordClassifierClient(ClassifierClient):
    """Offline fallback classifier driven by cue-word counts."""

    _POLICY = ("policy", "policies", "compliance", "governance")
    _PROCEDURE = ("procedure", "procedures", "step", "steps", "instruction")

    def classify(self, text: str) -> str:
        lowered = normalize_text(text)
        words = lowered.split()
        policy = sum(words.count(w) for w in self._POLICY)
        procedure = sum(words.count(w) for w in self._PROCEDURE)
        if policy == 0 and procedure == 0:
            return "Other"
        return "Policy" if policy >= procedure else "Procedure"


def classify_document(text: str, client: ClassifierClient) -> ClassificationResult:
    """Dispatch truncated text to the external classifier.

    Transport failures do not raise: the record is marked Other with the
    pending flag so ingestion can proceed and retry later.
    """
    payload = truncate_for_classification(text)
    if not payload.strip():
        return ClassificationResult(DocClass.OTHER, truncated_len=0, pending=True)
    try:
        label = client.classify(payload)
    except Exception:
        return ClassificationResult(
            DocClass.OTHER, truncated_len=len(payload), pending=True
        )
    try:
        doc_class = DocClass(str(label).strip().capitalize())
    except ValueError:
        raise InvalidInputError(f"classifier returned unknown class {label!r}")
    return ClassificationResult(doc_class, truncated_len=len(payload), pending=False)


# ----------------------------------------------------------------------
# Alternate input format: the full-page extractor JSON shape

_EXTERNAL_DOC_TYPES = {
    "ENGINEERING_DRAWING": None,
    "POLICY": DocClass.POLICY,
    "PROCEDURE": DocClass.PROCEDURE,
    "OTHER": DocClass.OTHER,
}


def convert_external_record(raw: dict, file_id: str) -> ExtractionRecord:
    """Convert one full-page extractor object into an ExtractionRecord.

    Accepts the {doc_type, text, drawing_fields, policy_fields,
    procedure_fields} shape produced by page-level extraction prompts.
    """
    if not isinstance(raw, dict):
        raise SchemaError("<document>", "expected a JSON object")
    doc_type = str(raw.get("doc_type", "")).upper()
    if doc_type not in _EXTERNAL_DOC_TYPES:
        allowed = ", ".join(_EXTERNAL_DOC_TYPES)
        raise SchemaError("doc_type", f"{raw.get('doc_type')!r} not one of: {allowed}")

    text = str(raw.get("text", ""))
    is_drawing = doc_type == "ENGINEERING_DRAWING"

    regions = []
    if is_drawing:
        fields_map = raw.get("drawing_fields") or {}
        for key, kind in (
            ("drawing_number", RegionKind.DRAWING_NUMBER),
            ("title_block_text", RegionKind.DATA_BLOCK),
            ("revision_block_text", RegionKind.REVISIONS_BLOCK),
            ("parts_list_or_bom", RegionKind.PARTS_LIST),
        ):
            value = str(fields_map.get(key) or "").strip()
            if value and value != "...":
                regions.append({"kind": kind.value, "text": value, "confidence": 1.0})
    else:
        # Fold class-specific fields into the text body so the document
        # parser recovers title/sections/steps from a single stream.
        extra = raw.get("policy_fields") if doc_type == "POLICY" else None
        extra = raw.get("procedure_fields") if doc_type == "PROCEDURE" else extra
        if extra:
            lead = [str(extra.get("title") or "").strip()]
            lead += [
                str(extra.get(k) or "").strip()
                for k in ("section_headings", "steps", "tables")
            ]
            lead = [x for x in lead if x and x != "..."]
            if lead:
                text = "\n".join(lead + [text])

    record = {
        "file_id": file_id,
        "kind_features": {
            "p_draw": 1.0 if is_drawing else 0.0,
            "h": 1.0 if is_drawing else 0.0,
            "cad_prior": 0,
        },
        "regions": regions,
        "full_text": text,
    }
    doc_class = _EXTERNAL_DOC_TYPES[doc_type]
    if doc_class is not None:
        record["doc_class"] = doc_class.value
    return validate_record(record)


def with_doc_class(record: ExtractionRecord, result: ClassificationResult):
    """Record copy carrying the classifier outcome."""
    return replace(record, doc_class=result.doc_class)
