"""Synthetic corpora with planted answers.

Generates drawing and document records whose relevance is known by
construction: each equipment family has a prime drawing (plus a
superseded revision of the same number), a look-alike procedure that
deliberately lures type-constrained queries, and assorted filler. The
paired query set carries graded relevance keys, so end-to-end quality
is measurable without human judgments.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

from .extraction import ExtractionRecord, RegionExtraction
from .kinds import DocClass, RegionKind
from .routing import RoutingFeatures, combine_heuristics

EQUIPMENT = [
    ("COOLING TOWER", "CT-3"),
    ("VOLTAGE MONITOR", "MCC-3"),
    ("FEED PUMP", "FP-12"),
    ("HEAT EXCHANGER", "HX-7"),
    ("CONTROL VALVE", "CV-21"),
    ("AIR COMPRESSOR", "AC-5"),
    ("TRANSFER SWITCH", "TS-9"),
    ("STORAGE TANK", "TK-44"),
    ("CONVEYOR DRIVE", "CD-2"),
    ("BLOWER FAN", "BF-8"),
    ("CHILLER UNIT", "CH-15"),
    ("DIESEL GENERATOR", "DG-6"),
]
AREAS = ["NORTH YARD", "PUMP HOUSE", "SUBSTATION", "MEZZANINE", "BASEMENT", "ROOF LEVEL"]
FACILITIES = ["R8E8700", "R8E8701", "B2F1200", "C3D4500", "TG:CAB1800"]
PART_CATALOG = [
    ("P-1001", "GASKET SET"),
    ("P-2207", "BEARING HOUSING"),
    ("V-310", "ISOLATION VALVE"),
    ("M-88", "MOTOR MOUNT"),
    ("S-42", "SEAL KIT"),
    ("F-73", "FILTER ELEMENT"),
]
SIZES = "ABCDE"


@dataclass
class SynthQuery:
    query_id: str
    text: str
    bucket: str
    qrels: dict[str, int] = field(default_factory=dict)
    solvable: bool = True

    def to_json(self) -> dict:
        return {
            "query_id": self.query_id,
            "query": self.text,
            "bucket": self.bucket,
            "qrels": self.qrels,
            "solvable": self.solvable,
        }


def _features(rng: Random, drawing: bool) -> RoutingFeatures:
    if drawing:
        sub = (rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0))
        p = rng.uniform(0.9, 0.995)
        cad = rng.choice([0, 1])
    else:
        sub = (rng.uniform(0.0, 0.15), rng.uniform(0.0, 0.2), rng.uniform(0.0, 0.1))
        p = rng.uniform(0.005, 0.08)
        cad = 0
    return RoutingFeatures(
        p_draw=p, heuristic=combine_heuristics(*sub), cad_prior=cad, sub_scores=sub
    )


def _date(rng: Random) -> _dt.date:
    return _dt.date(rng.randint(1995, 2020), rng.randint(1, 12), rng.randint(1, 28))


def _drawing_record(
    file_id: str,
    number: str,
    title: str,
    revision_history: list[str],
    facility: str,
    size: str,
    sheets: int,
    rng: Random,
    parts_rows: int | None = None,
    arrangement_tag: str = "",
) -> ExtractionRecord:
    conf = rng.uniform(0.82, 0.98)
    data_block = "\n".join(
        [
            f"DWG NO {number}",
            title,
            f"SIZE {size} SHEET 1 OF {sheets}",
            f"FACILITY {facility}",
        ]
    )
    revisions = "\n".join(revision_history)
    rows = []
    for part_id, desc in rng.sample(PART_CATALOG, k=parts_rows or rng.randint(2, 3)):
        rows.append(f"{part_id}  {desc}  {rng.randint(1, 6)}")
    parts = "\n".join(rows)
    arrangement = " ".join(
        w for w in ("GENERAL ARRANGEMENT", arrangement_tag, rng.choice(AREAS)) if w
    )
    full_text = "\n".join([data_block, revisions, parts, arrangement])
    regions = [
        RegionExtraction(RegionKind.DRAWING_NUMBER, number, conf),
        RegionExtraction(RegionKind.DATA_BLOCK, data_block, rng.uniform(0.8, 0.97)),
        RegionExtraction(RegionKind.REVISIONS_BLOCK, revisions, rng.uniform(0.8, 0.97)),
        RegionExtraction(RegionKind.PARTS_LIST, parts, rng.uniform(0.75, 0.95)),
    ]
    return ExtractionRecord(
        file_id=file_id,
        kind_features=_features(rng, drawing=True),
        regions=regions,
        full_text=full_text,
        date=_date(rng),
        quality=round(conf, 3),
        embedding_text=full_text,
        thumbnail_ref=f"thumbs/{file_id}.png",
    )


def _document_record(
    file_id: str,
    code: str,
    title_rest: str,
    body_lines: list[str],
    doc_class: DocClass,
    rng: Random,
) -> ExtractionRecord:
    full_text = "\n".join([f"{code} {title_rest}", *body_lines])
    return ExtractionRecord(
        file_id=file_id,
        kind_features=_features(rng, drawing=False),
        regions=[],
        full_text=full_text,
        doc_class=doc_class,
        date=_date(rng),
        quality=round(rng.uniform(0.7, 0.95), 3),
        embedding_text=full_text,
        thumbnail_ref=f"thumbs/{file_id}.png",
    )


def _family(i: int) -> tuple[str, str]:
    return EQUIPMENT[i % len(EQUIPMENT)]


def planted_corpus(
    seed: int = 7, n_drawings: int = 120, n_documents: int = 80
) -> tuple[list[ExtractionRecord], list[SynthQuery]]:
    """200 records plus 30 graded queries with planted answers."""
    rng = Random(seed)
    records: list[ExtractionRecord] = []
    families = len(EQUIPMENT)

    numbers: dict[int, str] = {}
    facilities: dict[int, str] = {}
    sizes: dict[int, str] = {}
    prime_ids: dict[int, str] = {}
    mate_ids: dict[int, str] = {}

    for i in range(n_drawings):
        fam = i % families
        slot = i // families
        equipment, asset = _family(fam)
        area = AREAS[(fam + slot) % len(AREAS)]
        if fam not in numbers:
            numbers[fam] = f"{40 + fam}X{1100 + 17 * fam}"
            facilities[fam] = FACILITIES[fam % len(FACILITIES)]
            sizes[fam] = SIZES[fam % len(SIZES)]
        file_id = f"dwg-{i:04d}"
        if slot == 0:
            # prime: latest revision of the family's anchor number; kept
            # shorter than its mate so length normalization favors it
            prime_ids[fam] = file_id
            records.append(
                _drawing_record(
                    file_id,
                    numbers[fam],
                    f"{equipment} {asset} {area}",
                    ["A  INITIAL RELEASE", f"B  REVISED PER ECO-{100 + fam}"],
                    facilities[fam],
                    sizes[fam],
                    sheets=1,
                    rng=rng,
                    parts_rows=2,
                    arrangement_tag=asset,
                )
            )
        elif slot == 1:
            # superseded revision of the same number
            mate_ids[fam] = file_id
            records.append(
                _drawing_record(
                    file_id,
                    numbers[fam],
                    f"{equipment} {asset} {area}",
                    ["A  INITIAL RELEASE"],
                    facilities[fam],
                    sizes[fam],
                    sheets=1,
                    rng=rng,
                    parts_rows=4,
                    arrangement_tag=asset,
                )
            )
        else:
            records.append(
                _drawing_record(
                    file_id,
                    f"{60 + fam}X{3000 + 7 * i}",
                    f"{equipment} {area} UNIT {slot}",
                    ["A  INITIAL RELEASE"],
                    FACILITIES[(fam + slot) % len(FACILITIES)],
                    SIZES[(fam + slot) % len(SIZES)],
                    sheets=rng.randint(1, 3),
                    rng=rng,
                )
            )

    decoy_ids: dict[int, str] = {}
    policy_ids: dict[int, str] = {}
    target_doc_ids: dict[int, str] = {}
    for i in range(n_documents):
        fam = i % families
        variant = i // families
        equipment, asset = _family(fam)
        low_eq = equipment.lower()
        file_id = f"doc-{i:04d}"
        if variant == 0:
            # lure for type-constrained queries: heavy asset overlap,
            # mentions drawings, but is a procedure
            decoy_ids[fam] = file_id
            records.append(
                _document_record(
                    file_id,
                    f"OPS-{200 + fam}",
                    f"{equipment} {asset} INSPECTION PROCEDURE",
                    [
                        f"1. Isolate the {low_eq} before inspection.",
                        f"2. Check the {asset} fasteners and torque values.",
                        f"3. Record findings against the drawings for the {low_eq}.",
                    ],
                    DocClass.PROCEDURE,
                    rng,
                )
            )
        elif variant == 1:
            policy_ids[fam] = file_id
            records.append(
                _document_record(
                    file_id,
                    f"POL-{300 + fam}",
                    f"{equipment} SAFETY POLICY",
                    [
                        "PURPOSE:",
                        f"This policy governs safe operation of the {low_eq}.",
                        "COMPLIANCE:",
                        f"All work near {asset} requires authorization.",
                    ],
                    DocClass.POLICY,
                    rng,
                )
            )
        elif variant == 2:
            target_doc_ids[fam] = file_id
            records.append(
                _document_record(
                    file_id,
                    f"OPS-{400 + fam}",
                    f"{equipment} {asset} MAINTENANCE PROCEDURE",
                    [
                        f"1. Shut down the {low_eq} and tag out power.",
                        f"2. Replace worn components on the {asset} assembly.",
                        "3. Restore the unit to service and log the work.",
                    ],
                    DocClass.PROCEDURE,
                    rng,
                )
            )
        else:
            topic = ["TRAINING SCHEDULE", "SITE ACCESS NOTICE", "WASTE HANDLING MEMO",
                     "CALIBRATION LOG", "SHIFT HANDOVER NOTES"][variant % 5]
            records.append(
                _document_record(
                    file_id,
                    f"DOC-{500 + i}",
                    f"{topic}",
                    [
                        f"General notice for the {AREAS[i % len(AREAS)].lower()}.",
                        f"Contact the operations office for the {low_eq} area.",
                    ],
                    DocClass.OTHER,
                    rng,
                )
            )

    queries: list[SynthQuery] = []

    def add(text: str, bucket: str, qrels: dict[str, int]) -> None:
        queries.append(
            SynthQuery(
                query_id=f"q{len(queries) + 1:03d}",
                text=text,
                bucket=bucket,
                qrels=qrels,
            )
        )

    for fam in range(8):
        equipment, asset = _family(fam)
        add(
            f"drawings only {equipment.lower()} {asset.lower()}",
            "Vision",
            {prime_ids[fam]: 2, mate_ids[fam]: 1},
        )
    for fam in range(6):
        add(
            f"drawing {numbers[fam]} rev B facility {facilities[fam]}",
            "Vision",
            {prime_ids[fam]: 2, mate_ids[fam]: 1},
        )
    for fam in (8, 9):
        equipment, asset = _family(fam)
        add(
            f"size {sizes[fam]} {equipment.lower()} {asset.lower()} drawing",
            "Vision",
            {prime_ids[fam]: 2, mate_ids[fam]: 1},
        )
    for fam in range(4):
        equipment, asset = _family(fam)
        add(
            f"{equipment.lower()} {asset.lower()} maintenance procedure",
            "NLP",
            {target_doc_ids[fam]: 2, decoy_ids[fam]: 1},
        )
    for fam in (4, 5):
        equipment, _ = _family(fam)
        add(
            f"{equipment.lower()} safety policy",
            "NLP",
            {policy_ids[fam]: 2},
        )
    for fam in (6, 7):
        equipment, asset = _family(fam)
        add(
            f"procedure OPS-{400 + fam} {equipment.lower()}",
            "NLP",
            {target_doc_ids[fam]: 2},
        )
    for fam in range(6):
        equipment, asset = _family(fam)
        add(
            f"{equipment.lower()} {asset.lower()} at {facilities[fam]}",
            "MultiModal",
            {prime_ids[fam]: 2, mate_ids[fam]: 1, target_doc_ids[fam]: 1},
        )

    return records, queries


def perf_corpus(seed: int = 11, n_docs: int = 5000) -> list[ExtractionRecord]:
    """Large flat corpus for throughput and latency measurements."""
    rng = Random(seed)
    records = []
    n_drawings = int(n_docs * 0.7)
    for i in range(n_drawings):
        equipment, asset = _family(i)
        records.append(
            _drawing_record(
                f"perf-dwg-{i:05d}",
                f"{70 + (i % 25)}X{10000 + i}",
                f"{equipment} {AREAS[i % len(AREAS)]} UNIT {i % 97}",
                ["A  INITIAL RELEASE", f"B  REVISED PER ECO-{i}"],
                FACILITIES[i % len(FACILITIES)],
                SIZES[i % len(SIZES)],
                sheets=1 + i % 3,
                rng=rng,
            )
        )
    for i in range(n_docs - n_drawings):
        equipment, asset = _family(i)
        records.append(
            _document_record(
                f"perf-doc-{i:05d}",
                f"OPS-{9000 + i}",
                f"{equipment} {asset} WORK INSTRUCTION {i % 53}",
                [
                    f"1. Prepare the {equipment.lower()} for maintenance.",
                    f"2. Document readings for unit {i % 97}.",
                ],
                DocClass.PROCEDURE if i % 2 else DocClass.POLICY,
                rng,
            )
        )
    return records


# ----------------------------------------------------------------------
# File round-trips


def write_records(records: list[ExtractionRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")


def write_queries(queries: list[SynthQuery], path: str | Path) -> None:
    with open(path, "w") as fh:
        for query in queries:
            fh.write(json.dumps(query.to_json(), sort_keys=True) + "\n")


def load_queries(path: str | Path) -> list[SynthQuery]:
    queries = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            queries.append(
                SynthQuery(
                    query_id=raw["query_id"],
                    text=raw["query"],
                    bucket=raw.get("bucket", ""),
                    qrels={k: int(v) for k, v in raw.get("qrels", {}).items()},
                    solvable=bool(raw.get("solvable", True)),
                )
            )
    return queries
