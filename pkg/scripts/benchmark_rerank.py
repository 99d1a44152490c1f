"""Measure what region-aware reranking buys on the planted corpus.

Tunes lambda on the planted queries, evaluates nDCG@3 and Succ@3 with
the reranker on and off, runs the paired significance test, and
finishes with a stub-judge scoring pass so the whole judging path gets
exercised end to end.
"""

from __future__ import annotations

import argparse
import dataclasses

from engsearch.embedding import ProjectionConfig, StubEncoderClient
from engsearch.evaluation import Pool
from engsearch.fusion import RerankParams, SearchEngine, tune_lambda
from engsearch.judge import (
    SCORING_TEMPLATE,
    JudgeConfig,
    JudgeItem,
    StubJudgeClient,
    judge_pool,
)
from engsearch.metrics import ndcg_at_k, paired_randomization_test
from engsearch.pipeline import ingest_records
from engsearch.queries import parse_query
from engsearch.synth import planted_corpus


def _scores(engine, queries, k):
    ndcgs, succ = [], []
    for q in queries:
        result = engine.search(parse_query(q.text), k)
        grades = [q.qrels.get(c.doc_id, 0) for c in result.candidates]
        ndcgs.append(ndcg_at_k(grades, k, list(q.qrels.values())))
        succ.append(1.0 if any(g >= 1 for g in grades) else 0.0)
    return ndcgs, succ


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--k", type=int, default=3)
    args = parser.parse_args()

    records, queries = planted_corpus(seed=args.seed)
    index, _ = ingest_records(records)
    encoder = StubEncoderClient()
    engine = SearchEngine(index, encoder, ProjectionConfig.default(encoder.dim))

    validation = [(parse_query(q.text), q.qrels) for q in queries]
    lam = tune_lambda(engine, validation, k=args.k)
    tuned = dataclasses.replace(
        engine.params, fusion=dataclasses.replace(engine.params.fusion, lambda_=lam)
    )
    on = SearchEngine(index, encoder, engine.projection, tuned)
    off = SearchEngine(
        index,
        encoder,
        engine.projection,
        dataclasses.replace(tuned, rerank=RerankParams(alpha=0.0, beta=0.0, gamma=0.0)),
    )

    ndcg_on, succ_on = _scores(on, queries, args.k)
    ndcg_off, succ_off = _scores(off, queries, args.k)
    p = paired_randomization_test(ndcg_on, ndcg_off)
    n = len(queries)
    print(f"tuned lambda: {lam:.1f}  ({n} queries, k={args.k})")
    print(f"                 rerank on   rerank off")
    print(f"mean nDCG@{args.k}:     {sum(ndcg_on)/n:.3f}       {sum(ndcg_off)/n:.3f}")
    print(f"Succ@{args.k}:          {sum(succ_on)/n:.3f}       {sum(succ_off)/n:.3f}")
    print(f"paired sign-flip p = {p:.4f}")

    def item_provider(query_id: str, doc_id: str) -> JudgeItem:
        entry = index.docs[doc_id]
        return JudgeItem(
            doc_id=doc_id,
            kind=entry.kind.value,
            snippet=" ".join(entry.fields.get("full_text", "").split())[:200],
        )

    pool = Pool(
        per_query={
            q.query_id: [
                c.doc_id for c in on.search(parse_query(q.text), args.k).candidates
            ]
            for q in queries
        }
    )
    texts = {q.query_id: q.text for q in queries}
    judges = [JudgeConfig(judge_id=j, template_id=SCORING_TEMPLATE)
              for j in ("stub-a", "stub-b")]
    judgments = judge_pool(pool, texts, item_provider, judges, StubJudgeClient())
    print(f"\nstub judging: {len(judgments.entries)} judgments "
          f"from {len(judges)} judges over {len(pool.per_query)} queries")
    for note in judgments.coverage_notes:
        print(f"coverage: {note}")


if __name__ == "__main__":
    main()
