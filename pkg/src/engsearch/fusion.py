"""Score fusion and region-aware reranking.

Raw BM25 and cosine scores live on incompatible scales, so each is
z-normalized over the candidate pool before the lambda interpolation
s_lambda = lambda*z_sparse + (1-lambda)*z_dense. The reranker then
adds a bonus when extracted region fields satisfy the query's slots,
subtracts for revision-constraint violations, and penalizes documents
outside the allowed types:

    s_final = s_lambda + alpha*match_region + beta*consistency_rev
              - gamma*off_type

Ties resolve by recency (min-max normalized over the pool), then
quality, then doc_id.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .embedding import DocEmbedding, EncoderClient, ProjectionConfig, embed_query
from .errors import InvalidInputError
from .extraction import DrawingMetadata, revision_sort_key
from .index import DEFAULT_FIELD_WEIGHTS, DocEntry, HybridIndex, tokenize
from .kinds import DocClass, Kind
from .metrics import ndcg_at_k
from .queries import (
    LATEST_REVISION,
    AllowedType,
    ConstraintKind,
    Polarity,
    QuerySpec,
)


@dataclass(frozen=True)
class FusionParams:
    lambda_: float = 0.5
    sigma_floor: float = 1e-6

    def __post_init__(self) -> None:
        if not 0.0 <= self.lambda_ <= 1.0:
            raise InvalidInputError("lambda must be in [0, 1]")
        if not self.sigma_floor > 0.0:
            raise InvalidInputError("sigma_floor must be positive")


@dataclass(frozen=True)
class RerankParams:
    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 1.0
    recency_weight: float = 1.0
    quality_weight: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "recency_weight", "quality_weight"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0.0:
                raise InvalidInputError(f"{name} must be finite and >= 0")


@dataclass
class Candidate:
    doc_id: str
    s_sparse: float = 0.0
    s_dense: float = 0.0
    z_sparse: float = 0.0
    z_dense: float = 0.0
    s_lambda: float = 0.0
    match_region: int = 0
    consistency_rev: float = 0.0
    off_type: int = 0
    s_final: float = 0.0
    tie_key: tuple = ()

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "s_sparse": self.s_sparse,
            "s_dense": self.s_dense,
            "z_sparse": self.z_sparse,
            "z_dense": self.z_dense,
            "s_lambda": self.s_lambda,
            "match_region": self.match_region,
            "consistency_rev": self.consistency_rev,
            "off_type": self.off_type,
            "s_final": self.s_final,
        }


def znorm(scores: Sequence[float], sigma_floor: float = 1e-6) -> list[float]:
    """Population z-scores with the standard deviation floored."""
    if len(scores) == 0:
        raise InvalidInputError("cannot z-normalize an empty score list")
    if not sigma_floor > 0.0:
        raise InvalidInputError("sigma_floor must be positive")
    arr = np.asarray(scores, dtype=float)
    sigma = max(float(arr.std()), sigma_floor)
    return ((arr - arr.mean()) / sigma).tolist()


def fuse(
    z_sparse: Mapping[str, float],
    z_dense: Mapping[str, float],
    params: FusionParams,
) -> dict[str, float]:
    """Interpolate the two z-score maps; both must cover the same docs."""
    if set(z_sparse) != set(z_dense):
        raise InvalidInputError("sparse and dense z-scores cover different candidates")
    lam = params.lambda_
    return {
        doc_id: lam * z_sparse[doc_id] + (1.0 - lam) * z_dense[doc_id]
        for doc_id in z_sparse
    }


# ----------------------------------------------------------------------
# Rerank terms


def _drawing_meta(entry: DocEntry) -> DrawingMetadata | None:
    return entry.metadata if isinstance(entry.metadata, DrawingMetadata) else None


def _governed_slots(query: QuerySpec) -> list[tuple[str, str]]:
    slots: list[tuple[str, str]] = []
    if query.facility:
        slots.append(("facility", query.facility))
    if query.asset_part:
        slots.append(("asset", query.asset_part))
    for c in query.constraints:
        if c.polarity is not Polarity.REQUIRE:
            continue
        if c.kind in (ConstraintKind.SHEET_COUNT, ConstraintKind.SIZE_CODE):
            slots.append((c.kind.value, c.value))
    return slots


def _slot_satisfied(entry: DocEntry, kind: str, value: str) -> bool:
    meta = _drawing_meta(entry)
    if kind == "facility":
        return meta is not None and meta.facility_tag == value
    if kind == "asset":
        if meta is None:
            return False
        if meta.drawing_number == value:
            return True
        if any(part_id == value for part_id, _, _ in meta.parts):
            return True
        title = entry.fields.get("title", "")
        squeezed = "".join(title.upper().split())
        return bool(value) and value in squeezed
    if kind == ConstraintKind.SHEET_COUNT.value:
        return meta is not None and meta.sheet is not None and str(meta.sheet[1]) == value
    if kind == ConstraintKind.SIZE_CODE.value:
        return meta is not None and meta.size_code == value
    return False


def region_match(entry: DocEntry, query: QuerySpec) -> int:
    """1 iff the query has region-governed slots and all are satisfied.

    A query with no such slots yields 0 for every candidate: a uniform
    bonus would cancel in the ranking but clutter score audits.
    """
    slots = _governed_slots(query)
    if not slots:
        return 0
    return int(all(_slot_satisfied(entry, kind, value) for kind, value in slots))


def _latest_by_dup_key(entries: Sequence[DocEntry]) -> dict[str, tuple]:
    latest: dict[str, tuple] = {}
    for entry in entries:
        meta = _drawing_meta(entry)
        if meta is None or meta.revision is None:
            continue
        key = revision_sort_key(meta.revision)
        if entry.dup_key not in latest or key > latest[entry.dup_key]:
            latest[entry.dup_key] = key
    return latest


def revision_consistency(
    entry: DocEntry, query: QuerySpec, pool_latest: Mapping[str, tuple]
) -> float:
    """-1 per violated revision constraint; 0 when none apply.

    Constraints only govern candidates that carry a revision; a policy
    document cannot mismatch a revision it does not have.
    """
    meta = _drawing_meta(entry)
    revision = meta.revision if meta else None
    if revision is None:
        return 0.0
    violations = 0
    for c in query.revision_constraints():
        if c.value == LATEST_REVISION:
            best = pool_latest.get(entry.dup_key)
            if best is not None and revision_sort_key(revision) < best:
                violations += 1
        elif c.polarity is Polarity.REQUIRE:
            if revision != c.value:
                violations += 1
        elif revision == c.value:
            violations += 1
    return float(-violations)


def _entry_types(entry: DocEntry) -> set[AllowedType]:
    if entry.kind is Kind.DRAWING:
        return {AllowedType.DRAWING}
    meta = entry.metadata
    if meta.doc_class is DocClass.POLICY:
        return {AllowedType.POLICY}
    if meta.doc_class is DocClass.PROCEDURE:
        return {AllowedType.PROCEDURE}
    return set()


def off_type(entry: DocEntry, query: QuerySpec) -> int:
    if query.allowed_types is None:
        return 0
    return int(not (_entry_types(entry) & set(query.allowed_types)))


def _tie_keys(
    candidates: Sequence[Candidate],
    docs: Mapping[str, DocEntry],
    params: RerankParams,
) -> None:
    dated = [
        docs[c.doc_id].date.toordinal()
        for c in candidates
        if docs[c.doc_id].date is not None
    ]
    lo = min(dated) if dated else 0
    hi = max(dated) if dated else 0
    for c in candidates:
        entry = docs[c.doc_id]
        if entry.date is None:
            recency = -1.0  # below every dated candidate
        elif hi > lo:
            recency = (entry.date.toordinal() - lo) / (hi - lo)
        else:
            recency = 1.0
        c.tie_key = (
            params.recency_weight * recency,
            params.quality_weight * entry.quality,
            c.doc_id,
        )


def rerank(
    candidates: Sequence[Candidate],
    query: QuerySpec,
    params: RerankParams,
    docs: Mapping[str, DocEntry],
) -> list[Candidate]:
    """Apply the region/revision/type adjustments and sort."""
    entries = [docs[c.doc_id] for c in candidates]
    pool_latest = _latest_by_dup_key(entries)
    out = [replace(c) for c in candidates]
    for cand, entry in zip(out, entries):
        cand.match_region = region_match(entry, query)
        cand.consistency_rev = revision_consistency(entry, query, pool_latest)
        cand.off_type = off_type(entry, query)
        cand.s_final = (
            cand.s_lambda
            + params.alpha * cand.match_region
            + params.beta * cand.consistency_rev
            - params.gamma * cand.off_type
        )
    _tie_keys(out, docs, params)
    out.sort(
        key=lambda c: (-c.s_final, -c.tie_key[0], -c.tie_key[1], c.tie_key[2])
    )
    return out


# ----------------------------------------------------------------------
# End-to-end search


@dataclass(frozen=True)
class SearchParams:
    fusion: FusionParams = field(default_factory=FusionParams)
    rerank: RerankParams = field(default_factory=RerankParams)
    sparse_pool: int = 100
    dense_pool: int = 100
    field_weights: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_FIELD_WEIGHTS)
    )

    def to_json(self) -> dict:
        return {
            "lambda": self.fusion.lambda_,
            "sigma_floor": self.fusion.sigma_floor,
            "alpha": self.rerank.alpha,
            "beta": self.rerank.beta,
            "gamma": self.rerank.gamma,
            "recency_weight": self.rerank.recency_weight,
            "quality_weight": self.rerank.quality_weight,
            "sparse_pool": self.sparse_pool,
            "dense_pool": self.dense_pool,
            "field_weights": self.field_weights,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "SearchParams":
        fusion = FusionParams(
            lambda_=float(raw.get("lambda", 0.5)),
            sigma_floor=float(raw.get("sigma_floor", 1e-6)),
        )
        rr = RerankParams(
            alpha=float(raw.get("alpha", 0.5)),
            beta=float(raw.get("beta", 0.5)),
            gamma=float(raw.get("gamma", 1.0)),
            recency_weight=float(raw.get("recency_weight", 1.0)),
            quality_weight=float(raw.get("quality_weight", 1.0)),
        )
        return cls(
            fusion=fusion,
            rerank=rr,
            sparse_pool=int(raw.get("sparse_pool", 100)),
            dense_pool=int(raw.get("dense_pool", 100)),
            field_weights={
                k: float(v)
                for k, v in raw.get("field_weights", DEFAULT_FIELD_WEIGHTS).items()
            },
        )


def load_params(path: str | Path) -> SearchParams:
    with open(path) as fh:
        return SearchParams.from_json(json.load(fh))


def save_params(params: SearchParams, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(params.to_json(), fh, indent=2, sort_keys=True)


@dataclass
class SearchResult:
    query: QuerySpec
    candidates: list[Candidate]
    timings: dict[str, float]
    pool_size: int


class SearchEngine:
    """Retrieval pipeline over one loaded index.

    Stages: sparse and dense candidate pools, exact scores for the
    union, z-normalization, interpolation, rerank, truncate. Read-only
    over the index, so concurrent searches are safe.
    """

    def __init__(
        self,
        index: HybridIndex,
        encoder: EncoderClient,
        projection: ProjectionConfig,
        params: SearchParams | None = None,
    ):
        self.index = index
        self.encoder = encoder
        self.projection = projection
        self.params = params or SearchParams()

    def _query_embedding(self, query: QuerySpec) -> DocEmbedding:
        text_emb = self.encoder.encode(query.normalized_text)
        return embed_query(text_emb, self.projection)

    def search(self, query: QuerySpec, k: int) -> SearchResult:
        if k < 1:
            raise InvalidInputError("k must be >= 1")
        timings: dict[str, float] = {}
        if not self.index.docs:
            return SearchResult(query=query, candidates=[], timings=timings, pool_size=0)

        t0 = time.perf_counter()
        terms = tokenize(query.rewritten_text)
        sparse_top = self.index.sparse.search(terms, self.params.sparse_pool)
        timings["sparse"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        q_emb = self._query_embedding(query)
        dense_top = self.index.dense.topk(q_emb, self.params.dense_pool)
        timings["dense"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        pool = sorted({doc_id for doc_id, _ in sparse_top}
                      | {doc_id for doc_id, _ in dense_top})
        if not pool:
            # No term overlap anywhere and an empty dense pool cannot
            # happen with docs present, but guard the former.
            pool = sorted(self.index.docs)
        sparse_raw = {d: self.index.sparse.bm25_score(terms, d) for d in pool}
        dense_raw = {d: self.index.dense.cosine(q_emb, d) for d in pool}
        z_s = dict(zip(pool, znorm([sparse_raw[d] for d in pool],
                                   self.params.fusion.sigma_floor)))
        z_d = dict(zip(pool, znorm([dense_raw[d] for d in pool],
                                   self.params.fusion.sigma_floor)))
        fused = fuse(z_s, z_d, self.params.fusion)
        candidates = [
            Candidate(
                doc_id=d,
                s_sparse=sparse_raw[d],
                s_dense=dense_raw[d],
                z_sparse=z_s[d],
                z_dense=z_d[d],
                s_lambda=fused[d],
            )
            for d in pool
        ]
        timings["fuse"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        ranked = rerank(candidates, query, self.params.rerank, self.index.docs)
        timings["rerank"] = time.perf_counter() - t0
        return SearchResult(
            query=query,
            candidates=ranked[:k],
            timings=timings,
            pool_size=len(pool),
        )


def tune_lambda(
    engine: SearchEngine,
    validation: Sequence[tuple[QuerySpec, Mapping[str, int]]],
    grid: Sequence[float] | None = None,
    k: int = 3,
) -> float:
    """Grid-search lambda for best mean nDCG@k; ties go to the larger value.

    Each validation entry pairs a query with graded judgments keyed by
    doc_id; the judged grades double as the nDCG ideal pool.
    """
    if not validation:
        raise InvalidInputError("validation set is empty")
    grid = sorted(grid if grid is not None else [i / 10 for i in range(11)])
    base = engine.params
    best_lambda = grid[0]
    best_score = -1.0
    try:
        for lam in grid:
            engine.params = replace(
                base, fusion=replace(base.fusion, lambda_=lam)
            )
            total = 0.0
            for query, qrels in validation:
                result = engine.search(query, k)
                grades = [qrels.get(c.doc_id, 0) for c in result.candidates]
                total += ndcg_at_k(grades, k, list(qrels.values()))
            score = total / len(validation)
            if score >= best_score:
                best_score = score
                best_lambda = lam
    finally:
        engine.params = base
    return best_lambda
