"""Generate the planted demo corpus and build a searchable index from it.

Writes records.jsonl, queries.jsonl, and a sharded index under --out,
then prints a few sample searches so the build can be eyeballed.
"""

from __future__ import annotations

import argparse
import dataclasses
from pathlib import Path

from engsearch.embedding import ProjectionConfig, StubEncoderClient
from engsearch.fusion import SearchEngine, save_params, tune_lambda
from engsearch.index import save_shards
from engsearch.pipeline import ingest_records
from engsearch.queries import parse_query
from engsearch.synth import planted_corpus, write_queries, write_records


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo", help="output directory")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--shards", type=int, default=4)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    records, queries = planted_corpus(seed=args.seed)
    write_records(records, out / "records.jsonl")
    write_queries(queries, out / "queries.jsonl")

    index, stats = ingest_records(records)
    save_shards(index, out / "index", shard_count=args.shards)
    print(
        f"built {stats.docs} docs ({stats.drawings} drawings, "
        f"{stats.documents} documents) in {stats.seconds:.2f} s"
    )
    print(f"index -> {out / 'index'}  queries -> {out / 'queries.jsonl'}")

    encoder = StubEncoderClient()
    engine = SearchEngine(index, encoder, ProjectionConfig.default(encoder.dim))
    validation = [(parse_query(q.text), q.qrels) for q in queries]
    lam = tune_lambda(engine, validation, k=3)
    engine.params = dataclasses.replace(
        engine.params, fusion=dataclasses.replace(engine.params.fusion, lambda_=lam)
    )
    save_params(engine.params, out / "params.json")
    print(f"tuned lambda {lam:.1f} -> {out / 'params.json'}")

    for text in queries[0].text, queries[20].text:
        result = engine.search(parse_query(text), 3)
        print(f"\n  {text}")
        for cand in result.candidates:
            entry = index.docs[cand.doc_id]
            print(f"    {cand.doc_id}  {entry.kind.value:8s}  s={cand.s_final:.3f}")


if __name__ == "__main__":
    main()
