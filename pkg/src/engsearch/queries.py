"""Free-text queries parsed into a slot template.

A query like "latest D-size drawing for CT-3 at R8E8700, not rev A" is
broken into facility, asset, allowed document types, and a constraint
list. Parsing is rule-based over a canonical uppercase form of the
text; deployments with unusual tag grammars can swap in their own
parser client instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Protocol, Sequence

from .errors import InvalidInputError
from .extraction import DEFAULT_FACILITY_PATTERNS, normalize_identifier, normalize_text


class AllowedType(str, Enum):
    DRAWING = "Drawing"
    POLICY = "Policy"
    PROCEDURE = "Procedure"


class Polarity(str, Enum):
    REQUIRE = "require"
    EXCLUDE = "exclude"


class ConstraintKind(str, Enum):
    REVISION = "revision"
    DATE = "date"
    SHEET_COUNT = "sheet_count"
    SIZE_CODE = "size_code"
    FACILITY = "facility"


LATEST_REVISION = "latest"

# Up to two short filler words may sit between the negation and the
# thing negated ("not a drawing", "except for rev A").
_NEGATION = re.compile(
    r"\b(?:NOT|NO|WITHOUT|EXCLUDING|EXCLUDE|EXCEPT|SKIP|OMIT)\b"
    r"[^A-Z0-9]*(?:\b[A-Z]{1,3}\b[^A-Z0-9]*){0,2}$"
)

_TYPE_WORDS = {
    AllowedType.DRAWING: re.compile(r"\bDRAWINGS?\b"),
    AllowedType.POLICY: re.compile(r"\bPOLIC(?:Y|IES)\b"),
    AllowedType.PROCEDURE: re.compile(r"\bPROCEDURES?\b"),
}

_REV_MENTION = re.compile(
    r"\bREV(?:ISION)?S?\.?\s*:?\s*"
    r"((?:LATEST|[A-Z]{1,2}|\d{1,3})\b"
    r"(?:(?:\s*,\s*|\s+AND\s+)(?:[A-Z]{1,2}|\d{1,3})\b)*)"
)
_LATEST_REV = re.compile(r"\b(?:LATEST|NEWEST|CURRENT)\s+REV(?:ISION)?S?\b")
_REV_SPLIT = re.compile(r"\s*,\s*|\s+AND\s+")

_SHEET_OF = re.compile(r"\bSHEET\s+\d+\s+OF\s+(\d+)\b")
_N_SHEETS = re.compile(r"\b(\d+)\s+SHEETS?\b")
_SHEET_EQ = re.compile(r"\bSHEETS?\s*[:=]\s*(\d+)\b")

_SIZE_BEFORE = re.compile(r"\bSIZE\s+([A-E])\b")
_SIZE_AFTER = re.compile(r"\b([A-E])[- ]SIZE\b")

_YEAR = r"(\d{4}(?:-\d{2}-\d{2})?)"
_DATE_BETWEEN = re.compile(rf"\b(?:BETWEEN|FROM)\s+{_YEAR}\s+(?:AND|TO)\s+{_YEAR}")
_DATE_AFTER = re.compile(rf"\b(?:AFTER|SINCE)\s+{_YEAR}")
_DATE_BEFORE = re.compile(rf"\bBEFORE\s+{_YEAR}")

# An asset/part mention must mix letters and digits so plain words and
# bare numbers (sheet counts, years) never qualify.
_ASSET = re.compile(r"\b[A-Z0-9]+(?:-[A-Z0-9]+)+\b|\b[A-Z0-9]{2,}\b")


@dataclass(frozen=True)
class Constraint:
    kind: ConstraintKind
    value: str
    polarity: Polarity

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "value": self.value,
            "polarity": self.polarity.value,
        }


@dataclass(frozen=True)
class QuerySpec:
    raw_text: str
    normalized_text: str
    rewritten_text: str
    facility: str | None = None
    asset_part: str | None = None
    allowed_types: frozenset[AllowedType] | None = None
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self) -> None:
        if self.normalized_text != normalize_text(self.raw_text):
            raise InvalidInputError("normalized_text must match normalize_text(raw)")

    def revision_constraints(self) -> tuple[Constraint, ...]:
        return tuple(c for c in self.constraints if c.kind is ConstraintKind.REVISION)

    def to_json(self) -> dict:
        return {
            "raw_text": self.raw_text,
            "normalized_text": self.normalized_text,
            "rewritten_text": self.rewritten_text,
            "facility": self.facility,
            "asset_part": self.asset_part,
            "allowed_types": (
                sorted(t.value for t in self.allowed_types)
                if self.allowed_types is not None
                else None
            ),
            "constraints": [c.to_json() for c in self.constraints],
        }


class SlotParserClient(Protocol):
    """Drop-in replacement for the rule-based slot extractor."""

    def parse(self, raw_text: str) -> QuerySpec: ...


@dataclass(frozen=True)
class QueryParserConfig:
    facility_patterns: tuple[str, ...] = DEFAULT_FACILITY_PATTERNS


def _negated(upper: str, start: int) -> bool:
    return bool(_NEGATION.search(upper[max(0, start - 24) : start]))


def _spans_overlap(spans: list[tuple[int, int]], start: int, end: int) -> bool:
    return any(start < b and end > a for a, b in spans)


def _revision_tokens(raw: str) -> list[str]:
    out = []
    for tok in _REV_SPLIT.split(raw):
        if tok:
            out.append(LATEST_REVISION if tok == "LATEST" else normalize_identifier(tok))
    return out


def _rewrite(
    normalized: str,
    facility: str | None,
    asset: str | None,
    constraints: Sequence[Constraint],
) -> str:
    extra_terms = []
    if facility:
        extra_terms.append(facility)
    if asset:
        extra_terms.append(asset)
    for c in constraints:
        if c.kind in (ConstraintKind.REVISION, ConstraintKind.SIZE_CODE):
            if c.value != LATEST_REVISION and c.polarity is Polarity.REQUIRE:
                extra_terms.append(c.value)
    if not extra_terms:
        return normalized
    joined = " ".join([normalized] + [normalize_text(t) for t in extra_terms])
    return normalize_text(joined)


def apply_slot_overrides(
    spec: QuerySpec,
    facility: str | None = None,
    revisions: Sequence[str] | None = None,
    revision_polarity: Polarity = Polarity.REQUIRE,
) -> QuerySpec:
    """Rebuild a parsed query with slot values supplied outside the text.

    Facet panels use this instead of splicing phrases into the query
    box. A facility override replaces the parsed facility; a revision
    override replaces every text-derived revision constraint. The
    rewritten retrieval text is rebuilt under the same expansion rule
    parsing applies, so ranking sees an override exactly as if it had
    been typed.
    """
    new_facility = spec.facility
    if facility is not None and facility.strip():
        new_facility = normalize_identifier(facility.strip())
    constraints = list(spec.constraints)
    if revisions is not None:
        constraints = [c for c in constraints if c.kind is not ConstraintKind.REVISION]
        for value in revisions:
            tok = value.strip()
            if not tok:
                raise InvalidInputError("revision override values must be non-empty")
            if tok.upper() == LATEST_REVISION.upper():
                tok = LATEST_REVISION
            else:
                tok = normalize_identifier(tok)
            constraints.append(
                Constraint(ConstraintKind.REVISION, tok, revision_polarity)
            )
    rewritten = _rewrite(
        spec.normalized_text, new_facility, spec.asset_part, constraints
    )
    return replace(
        spec,
        facility=new_facility,
        constraints=tuple(constraints),
        rewritten_text=rewritten,
    )


def parse_query(raw_text: str, config: QueryParserConfig | None = None) -> QuerySpec:
    """Derive the slot template and rewritten retrieval text for a query."""
    config = config or QueryParserConfig()
    normalized = normalize_text(raw_text)
    upper = normalized.upper()
    consumed: list[tuple[int, int]] = []
    constraints: list[Constraint] = []
    facility: str | None = None
    asset: str | None = None

    for pattern in config.facility_patterns:
        for m in re.finditer(pattern, upper):
            consumed.append(m.span())
            value = normalize_identifier(m.group(0))
            if _negated(upper, m.start()):
                constraints.append(
                    Constraint(ConstraintKind.FACILITY, value, Polarity.EXCLUDE)
                )
            elif facility is None:
                facility = value

    for m in _LATEST_REV.finditer(upper):
        consumed.append(m.span())
        if not any(
            c.kind is ConstraintKind.REVISION and c.value == LATEST_REVISION
            for c in constraints
        ):
            constraints.append(
                Constraint(ConstraintKind.REVISION, LATEST_REVISION, Polarity.REQUIRE)
            )
    for m in _REV_MENTION.finditer(upper):
        if _spans_overlap(consumed, *m.span()):
            continue
        consumed.append(m.span())
        polarity = Polarity.EXCLUDE if _negated(upper, m.start()) else Polarity.REQUIRE
        for tok in _revision_tokens(m.group(1)):
            constraints.append(Constraint(ConstraintKind.REVISION, tok, polarity))

    for pattern in (_SHEET_OF, _SHEET_EQ, _N_SHEETS):
        m = pattern.search(upper)
        if m and not _spans_overlap(consumed, *m.span()):
            consumed.append(m.span())
            polarity = (
                Polarity.EXCLUDE if _negated(upper, m.start()) else Polarity.REQUIRE
            )
            constraints.append(
                Constraint(ConstraintKind.SHEET_COUNT, m.group(1), polarity)
            )
            break

    for pattern in (_SIZE_BEFORE, _SIZE_AFTER):
        m = pattern.search(upper)
        if m and not _spans_overlap(consumed, *m.span()):
            consumed.append(m.span())
            polarity = (
                Polarity.EXCLUDE if _negated(upper, m.start()) else Polarity.REQUIRE
            )
            constraints.append(
                Constraint(ConstraintKind.SIZE_CODE, m.group(1), polarity)
            )
            break

    m = _DATE_BETWEEN.search(upper)
    if m:
        consumed.append(m.span())
        constraints.append(
            Constraint(
                ConstraintKind.DATE, f"{m.group(1)}..{m.group(2)}", Polarity.REQUIRE
            )
        )
    else:
        m = _DATE_AFTER.search(upper)
        if m:
            consumed.append(m.span())
            constraints.append(
                Constraint(ConstraintKind.DATE, f"{m.group(1)}..", Polarity.REQUIRE)
            )
        m = _DATE_BEFORE.search(upper)
        if m and not _spans_overlap(consumed, *m.span()):
            consumed.append(m.span())
            constraints.append(
                Constraint(ConstraintKind.DATE, f"..{m.group(1)}", Polarity.REQUIRE)
            )

    allowed: set[AllowedType] = set()
    denied: set[AllowedType] = set()
    for kind_value, pattern in _TYPE_WORDS.items():
        for m in pattern.finditer(upper):
            (denied if _negated(upper, m.start()) else allowed).add(kind_value)
    allowed -= denied
    allowed_types: frozenset[AllowedType] | None = None
    if allowed:
        allowed_types = frozenset(allowed)
    elif denied:
        allowed_types = frozenset(set(AllowedType) - denied)

    for m in _ASSET.finditer(upper):
        tok = m.group(0)
        if _spans_overlap(consumed, *m.span()):
            continue
        if not (any(c.isdigit() for c in tok) and any(c.isalpha() for c in tok)):
            continue
        asset = normalize_identifier(tok)
        break

    rewritten = _rewrite(normalized, facility, asset, constraints)

    return QuerySpec(
        raw_text=raw_text,
        normalized_text=normalized,
        rewritten_text=rewritten,
        facility=facility,
        asset_part=asset,
        allowed_types=allowed_types,
        constraints=tuple(constraints),
    )
