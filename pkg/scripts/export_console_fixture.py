"""Regenerate the search-console test fixture from the planted corpus.

Builds the planted demo engine, replays the console's scripted queries
through the real HTTP app, and freezes request/response pairs into
frontend/tests/fixtures/searches.json. The console test suite serves
these from a local fixture server, so rerun this script whenever the
search response shape changes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
from pathlib import Path

from fastapi.testclient import TestClient

from engsearch.embedding import ProjectionConfig, StubEncoderClient
from engsearch.fusion import SearchEngine, tune_lambda
from engsearch.pipeline import ingest_records
from engsearch.queries import parse_query
from engsearch.service import create_app
from engsearch.synth import planted_corpus

K = 5

ANY = {"type": "any", "facility": "", "revision": "", "revisionMode": "require"}

# (name, query text, facet-panel state): one entry per scripted console
# search. Facet dicts mirror the console's FacetState fields.
SCRIPTED = [
    ("plain-ct3", "cooling tower ct-3", ANY),
    ("plain-fp12", "feed pump fp-12", ANY),
    ("plain-hx7-procedure", "heat exchanger hx-7 maintenance procedure", ANY),
    ("plain-cv-policy", "control valve safety policy", ANY),
    ("typed-slots", "drawing 41X1117 rev B facility R8E8701", ANY),
    ("plain-ops406", "procedure OPS-406 transfer switch", ANY),
    ("plain-tk44", "storage tank tk-44", ANY),
    ("typed-size-d", "size D conveyor drive cd-2 drawing", ANY),
    ("drawings-ct3", "cooling tower ct-3", {**ANY, "type": "drawing"}),
    ("drawings-mcc3", "voltage monitor mcc-3", {**ANY, "type": "drawing"}),
    ("drawings-ac5", "air compressor ac-5", {**ANY, "type": "drawing"}),
    ("drawings-bf8", "blower fan bf-8", {**ANY, "type": "drawing"}),
    ("drawings-ts9", "transfer switch ts-9", {**ANY, "type": "drawing"}),
    ("documents-fp12", "feed pump fp-12 maintenance", {**ANY, "type": "document"}),
    ("documents-cv", "safety policy control valve", {**ANY, "type": "document"}),
    ("facility-ct3", "cooling tower ct-3", {**ANY, "facility": "R8E8700"}),
    ("facility-mcc3", "voltage monitor mcc-3", {**ANY, "facility": "R8E8701"}),
    (
        "drawings-facility-hx7",
        "heat exchanger hx-7",
        {**ANY, "type": "drawing", "facility": "C3D4500"},
    ),
    (
        "rev-exclude-40x1100",
        "drawing 40X1100",
        {**ANY, "revision": "A", "revisionMode": "exclude"},
    ),
    (
        "rev-require-44x1168",
        "drawing 44X1168",
        {**ANY, "revision": "B", "revisionMode": "require"},
    ),
]


def build_request(query: str, facets: dict, k: int) -> dict:
    """Mirror of the console's buildRequest; keep the two in sync."""
    request: dict = {"query": query, "k": k}
    if facets["type"] == "drawing":
        request["allowed_types"] = ["Drawing"]
        request["filter_kinds"] = ["Drawing"]
    elif facets["type"] == "document":
        request["allowed_types"] = ["Policy", "Procedure"]
        request["filter_kinds"] = ["Document"]
    slots: dict = {}
    if facets["facility"].strip():
        slots["facility"] = facets["facility"].strip()
    revision = facets["revision"].strip()
    if revision:
        slots["revision"] = {
            "values": [v.strip() for v in revision.split(",") if v.strip()],
            "polarity": facets["revisionMode"],
        }
    if slots:
        request["slots"] = slots
    return request


def build_client() -> TestClient:
    records, queries = planted_corpus()
    index, _ = ingest_records(records)
    encoder = StubEncoderClient()
    engine = SearchEngine(index, encoder, ProjectionConfig.default(encoder.dim))
    validation = [(parse_query(q.text), q.qrels) for q in queries]
    lam = tune_lambda(engine, validation, k=3)
    engine.params = dataclasses.replace(
        engine.params, fusion=dataclasses.replace(engine.params.fusion, lambda_=lam)
    )
    print(f"planted engine ready: {len(records)} docs, lambda {lam:.1f}")
    return TestClient(create_app(engine=engine))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    default_out = (
        Path(__file__).resolve().parents[1]
        / "frontend"
        / "tests"
        / "fixtures"
        / "searches.json"
    )
    parser.add_argument("--out", type=Path, default=default_out)
    args = parser.parse_args()

    client = build_client()
    entries = []
    for name, query, facets in SCRIPTED:
        request = build_request(query, facets, K)
        response = client.post("/v1/search", json=request)
        if response.status_code != 200:
            raise SystemExit(f"{name}: HTTP {response.status_code}: {response.text}")
        body = response.json()
        if not body["results"]:
            raise SystemExit(f"{name}: empty result list")
        if facets["type"] == "drawing":
            kinds = {card["kind"] for card in body["results"]}
            if kinds != {"Drawing"}:
                raise SystemExit(f"{name}: drawings-only facet returned {kinds}")
        entries.append(
            {
                "name": name,
                "query": query,
                "facets": facets,
                "request": request,
                "response": body,
            }
        )
        kinds = " ".join(
            "dwg" if card["kind"] == "Drawing" else "doc" for card in body["results"]
        )
        print(f"  {name}: {len(body['results'])} results [{kinds}]")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(entries, indent=1) + "\n")
    print(f"wrote {len(entries)} scripted searches -> {args.out}")


if __name__ == "__main__":
    main()
