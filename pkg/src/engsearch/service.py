"""HTTP surface: search over a loaded index, plus minimal ingestion.

The service shares the library search path verbatim: a request builds a
QuerySpec, runs ``SearchEngine.search``, and serializes the result with
its score decomposition and stage timings. Request bodies are validated
by hand so malformed input maps to a 400 with a named field rather than
a framework-shaped error.
"""

from __future__ import annotations

import dataclasses
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .embedding import ProjectionConfig, StubEncoderClient
from .errors import EngSearchError, NotFoundError, SchemaError
from .extraction import validate_record
from .fusion import SearchEngine, SearchParams, SearchResult, load_params
from .index import DocEntry, load_shards, save_shards, tokenize
from .kinds import Kind
from .pipeline import DEFAULT_ROUTER, record_to_entry
from .queries import AllowedType, Polarity, apply_slot_overrides, parse_query
from .routing import score_logit

SNIPPET_RADIUS = 80

_OVERRIDE_KEYS = {
    "lambda", "sigma_floor", "alpha", "beta", "gamma",
    "recency_weight", "quality_weight", "sparse_pool", "dense_pool",
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    index_path: str = "index"
    params_path: str | None = None
    cors_origins: tuple[str, ...] = ()
    judge_roster: tuple[str, ...] = ("stub-judge",)
    shard_count: int = 4
    default_k: int = 10

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        path = Path(path)
        if not path.exists():
            raise NotFoundError(f"config file does not exist: {path}")
        raw = json.loads(path.read_text())
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise SchemaError(sorted(unknown)[0], "unknown config key")
        kwargs = {k: v for k, v in raw.items() if k in known}
        for key in ("cors_origins", "judge_roster"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        config_path = os.environ.get("ENGSEARCH_CONFIG")
        config = cls.from_file(config_path) if config_path else cls()
        listen = os.environ.get("ENGSEARCH_LISTEN")
        if listen:
            host, _, port = listen.rpartition(":")
            if not host or not port.isdigit():
                raise SchemaError("ENGSEARCH_LISTEN", f"expected host:port, got {listen!r}")
            config.host, config.port = host, int(port)
        return config


def build_engine(
    index_path: str | Path,
    params_path: str | Path | None = None,
    encoder=None,
) -> SearchEngine:
    """Load shards and parameters from disk into a ready engine."""
    index_path = Path(index_path)
    if not index_path.exists():
        raise NotFoundError(f"index path does not exist: {index_path}")
    loaded = load_shards(index_path)
    if params_path is not None:
        params_path = Path(params_path)
        if not params_path.exists():
            raise NotFoundError(f"params file does not exist: {params_path}")
        params = load_params(params_path)
    else:
        params = SearchParams()
    encoder = encoder or StubEncoderClient()
    projection = ProjectionConfig.default(encoder.dim)
    if projection.doc_dim != loaded.manifest.embedding_dim:
        raise SchemaError(
            "embedding_dim",
            f"index stores {loaded.manifest.embedding_dim}-dim vectors but the "
            f"encoder projection produces {projection.doc_dim}",
        )
    return SearchEngine(loaded.index, encoder, projection, params)


def _bad_request(message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=400)


def _parse_allowed_types(raw: object) -> frozenset[AllowedType] | None:
    if raw is None:
        return None
    if not isinstance(raw, list) or not raw:
        raise ValueError("allowed_types must be a non-empty list of type names")
    by_name = {t.value.upper(): t for t in AllowedType}
    out = set()
    for item in raw:
        if not isinstance(item, str) or item.upper() not in by_name:
            names = ", ".join(t.value for t in AllowedType)
            raise ValueError(f"allowed_types entries must be one of: {names}")
        out.add(by_name[item.upper()])
    return frozenset(out)


def _parse_filter_kinds(raw: object) -> frozenset[Kind] | None:
    if raw is None:
        return None
    if not isinstance(raw, list) or not raw:
        raise ValueError("filter_kinds must be a non-empty list of kind names")
    by_name = {k.value.upper(): k for k in Kind}
    out = set()
    for item in raw:
        if not isinstance(item, str) or item.upper() not in by_name:
            names = ", ".join(k.value for k in Kind)
            raise ValueError(f"filter_kinds entries must be one of: {names}")
        out.add(by_name[item.upper()])
    return frozenset(out)


def _parse_slots(raw: object) -> tuple[str | None, list[str] | None, Polarity] | None:
    """Facet-panel slot overrides: facility text and revision include/exclude."""
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ValueError("slots must be an object")
    unknown = set(raw) - {"facility", "revision"}
    if unknown:
        raise ValueError(f"unknown slots key: {sorted(unknown)[0]}")
    facility = raw.get("facility")
    if facility is not None and (not isinstance(facility, str) or not facility.strip()):
        raise ValueError("slots.facility must be a non-empty string")
    revisions: list[str] | None = None
    polarity = Polarity.REQUIRE
    revision = raw.get("revision")
    if revision is not None:
        if not isinstance(revision, dict):
            raise ValueError("slots.revision must be an object")
        unknown = set(revision) - {"values", "polarity"}
        if unknown:
            raise ValueError(f"unknown slots.revision key: {sorted(unknown)[0]}")
        values = revision.get("values")
        if (
            not isinstance(values, list)
            or not values
            or not all(isinstance(v, str) and v.strip() for v in values)
        ):
            raise ValueError(
                "slots.revision.values must be a non-empty list of revision names"
            )
        mode = revision.get("polarity", Polarity.REQUIRE.value)
        if mode not in (Polarity.REQUIRE.value, Polarity.EXCLUDE.value):
            raise ValueError("slots.revision.polarity must be require or exclude")
        revisions = [v.strip() for v in values]
        polarity = Polarity(mode)
    if facility is None and revisions is None:
        return None
    return facility, revisions, polarity


def _apply_override(params: SearchParams, override: object) -> SearchParams:
    if override is None:
        return params
    if not isinstance(override, dict):
        raise ValueError("params_override must be an object")
    unknown = set(override) - _OVERRIDE_KEYS
    if unknown:
        raise ValueError(f"unknown params_override key: {sorted(unknown)[0]}")
    merged = params.to_json()
    merged.update(override)
    return SearchParams.from_json(merged)


def snippet_for(full_text: str, terms: list[str], radius: int = SNIPPET_RADIUS) -> str:
    """Window of text around the first query-term hit."""
    flat = " ".join(full_text.split())
    lowered = flat.lower()
    hit = -1
    for term in terms:
        pos = lowered.find(term.lower())
        if pos >= 0 and (hit < 0 or pos < hit):
            hit = pos
    if hit < 0:
        return flat[: 2 * radius]
    start = max(0, hit - radius)
    end = min(len(flat), hit + radius)
    prefix = "..." if start > 0 else ""
    suffix = "..." if end < len(flat) else ""
    return f"{prefix}{flat[start:end]}{suffix}"


def _result_card(rank: int, cand, entry: DocEntry, terms: list[str]) -> dict:
    card = {
        "rank": rank,
        "doc_id": entry.doc_id,
        "kind": entry.kind.value,
        "title": entry.fields.get("title", ""),
        "snippet": snippet_for(entry.fields.get("full_text", ""), terms),
        "thumbnail_ref": entry.thumbnail_ref,
        "date": entry.date.isoformat() if entry.date else None,
        "score": cand.to_json(),
    }
    meta = entry.metadata
    if entry.kind is Kind.DRAWING:
        card["drawing_number"] = getattr(meta, "drawing_number", None)
        card["revision"] = getattr(meta, "revision", None)
        card["facility"] = getattr(meta, "facility_tag", None)
        card["size_code"] = getattr(meta, "size_code", None)
        sheet = getattr(meta, "sheet", None)
        card["sheet"] = list(sheet) if sheet else None
    else:
        doc_class = getattr(meta, "doc_class", None)
        card["doc_class"] = doc_class.value if doc_class else None
    return card


def search_response(
    result: SearchResult,
    engine: SearchEngine,
    filter_kinds: frozenset[Kind] | None = None,
    limit: int | None = None,
) -> dict:
    """Serialize a search result, optionally keeping only the given kinds.

    Filtering preserves ranking order and renumbers ranks within the
    returned page, so a kind-faceted page reads like any other page.
    """
    terms = tokenize(result.query.rewritten_text)
    candidates = result.candidates
    if filter_kinds is not None:
        candidates = [
            c for c in candidates if engine.index.docs[c.doc_id].kind in filter_kinds
        ]
    if limit is not None:
        candidates = candidates[:limit]
    return {
        "query": result.query.to_json(),
        "results": [
            _result_card(i + 1, cand, engine.index.docs[cand.doc_id], terms)
            for i, cand in enumerate(candidates)
        ],
        "timings_ms": {k: round(v * 1000.0, 3) for k, v in result.timings.items()},
        "pool_size": result.pool_size,
    }


def create_app(
    engine: SearchEngine | None = None,
    config: ServiceConfig | None = None,
) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="engsearch", version="1")
    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )
    app.state.engine = engine
    app.state.config = config
    app.state.write_lock = threading.Lock()

    @app.get("/v1/health")
    async def health() -> dict:
        loaded = app.state.engine is not None
        docs = len(app.state.engine.index.docs) if loaded else 0
        return {"status": "ok" if loaded else "empty", "index_loaded": loaded, "docs": docs}

    @app.post("/v1/search")
    async def search(request: Request):
        if app.state.engine is None:
            return JSONResponse({"error": "index not loaded"}, status_code=503)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _bad_request("request body must be JSON")
        if not isinstance(body, dict):
            return _bad_request("request body must be a JSON object")
        query_text = body.get("query")
        if not isinstance(query_text, str) or not query_text.strip():
            return _bad_request("query must be a non-empty string")
        k = body.get("k", config.default_k)
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            return _bad_request("k must be a positive integer")
        try:
            facet_types = _parse_allowed_types(body.get("allowed_types"))
            slots = _parse_slots(body.get("slots"))
            filter_kinds = _parse_filter_kinds(body.get("filter_kinds"))
            params = _apply_override(app.state.engine.params, body.get("params_override"))
        except (ValueError, EngSearchError) as exc:
            return _bad_request(str(exc))

        spec = parse_query(query_text)
        if facet_types is not None:
            spec = dataclasses.replace(spec, allowed_types=facet_types)
        if slots is not None:
            facility, revisions, polarity = slots
            spec = apply_slot_overrides(
                spec,
                facility=facility,
                revisions=revisions,
                revision_polarity=polarity,
            )
        engine = app.state.engine
        if params is not engine.params:
            engine = SearchEngine(engine.index, engine.encoder, engine.projection, params)
        # a kind filter trims after ranking, so fetch extra to keep the page full
        fetch_k = k if filter_kinds is None else max(k * 4, 25)
        result = engine.search(spec, fetch_k)
        return JSONResponse(search_response(result, engine, filter_kinds, limit=k))

    @app.post("/v1/ingest")
    async def ingest(request: Request):
        if app.state.engine is None:
            return JSONResponse({"error": "index not loaded"}, status_code=503)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _bad_request("request body must be JSON")
        if not isinstance(body, dict) or not isinstance(body.get("records"), list):
            return _bad_request("body must be an object with a records array")
        engine = app.state.engine
        ingested, warnings = 0, []
        with app.state.write_lock:
            for i, raw in enumerate(body["records"]):
                try:
                    record = validate_record(raw)
                    decision = score_logit(record.kind_features, DEFAULT_ROUTER)
                    entry = record_to_entry(
                        record, decision, engine.encoder, engine.projection
                    )
                    engine.index.add_document(entry)
                    ingested += 1
                except EngSearchError as exc:
                    warnings.append(f"records[{i}]: {exc}")
            index_path = Path(config.index_path)
            if ingested and index_path.exists():
                save_shards(engine.index, index_path, config.shard_count)
        return {"ingested": ingested, "warnings": warnings}

    return app


def serve(config: ServiceConfig, engine: SearchEngine) -> None:
    import uvicorn

    uvicorn.run(
        create_app(engine=engine, config=config),
        host=config.host,
        port=config.port,
        log_level="warning",
    )
