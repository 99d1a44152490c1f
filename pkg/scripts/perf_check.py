"""Throughput and latency check on the 5k-document synthetic corpus.

Reports ingestion ms/doc and per-query search latency in exact mode.
The budget is 50 ms/doc for ingestion and 100 ms/query for search.
"""

from __future__ import annotations

import argparse
import time

from engsearch.embedding import ProjectionConfig, StubEncoderClient
from engsearch.fusion import SearchEngine
from engsearch.pipeline import ingest_records
from engsearch.queries import parse_query
from engsearch.synth import perf_corpus

PROBES = [
    "feed pump work instruction",
    "drawing 70X10005",
    "storage tank north yard",
    "voltage monitor substation unit 14",
    "conveyor drive roof level",
    "heat exchanger mezzanine",
    "chiller unit basement",
    "work instruction 42",
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--k", type=int, default=10)
    args = parser.parse_args()

    records = perf_corpus(seed=args.seed, n_docs=args.docs)
    index, stats = ingest_records(records)
    print(f"ingest: {stats.docs} docs in {stats.seconds:.2f} s "
          f"-> {stats.ms_per_doc:.2f} ms/doc (budget 50)")

    encoder = StubEncoderClient()
    engine = SearchEngine(index, encoder, ProjectionConfig.default(encoder.dim))
    worst = 0.0
    for text in PROBES:
        spec = parse_query(text)
        t0 = time.perf_counter()
        result = engine.search(spec, args.k)
        ms = (time.perf_counter() - t0) * 1000.0
        worst = max(worst, ms)
        stages = "  ".join(f"{s}={v * 1000:.1f}" for s, v in result.timings.items())
        print(f"  {ms:6.1f} ms  pool={result.pool_size:4d}  [{stages}]  {text}")
    print(f"search: worst {worst:.1f} ms over {len(PROBES)} queries (budget 100)")


if __name__ == "__main__":
    main()
