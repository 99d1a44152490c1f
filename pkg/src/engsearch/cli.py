"""Command-line suite.

Subcommands wire the library together: stream records into shards,
inspect an index, route files, search, evaluate runs against judgments,
drive judging campaigns, tune the fusion weight, and serve HTTP.

Exit codes are part of the contract: 0 success, 1 usage error, 2 data
error, 3 external-service error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .errors import (
    EngSearchError,
    InvalidInputError,
    JudgeTransportError,
    NotFoundError,
)
from .evaluation import (
    MODE_JUDGE_MEAN,
    MODE_MEDIAN,
    Pool,
    check_buckets,
    evaluate_run,
    load_judgments,
    load_run,
    pool_and_dedup,
    render_report,
    save_judgments,
)
from .extraction import validate_record
from .fusion import SearchParams, load_params, save_params, tune_lambda
from .index import save_shards
from .index.store import load_shards
from .judge import (
    ARENA_TEMPLATE,
    SCORING_TEMPLATE,
    HttpJudgeClient,
    JudgeConfig,
    JudgeItem,
    StubJudgeClient,
    TranscriptArchive,
    arena_campaign,
    judge_pool,
    tally_arena,
)
from .pipeline import DEFAULT_ROUTER, ingest_records
from .queries import parse_query
from .routing import score_logit
from .service import (
    ServiceConfig,
    _parse_allowed_types,
    build_engine,
    search_response,
    serve,
)
from .synth import load_queries

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_EXTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract reserves 2 for data
    # errors, so usage failures surface as exceptions instead
    def error(self, message):
        raise UsageError(message)


def _read_records(path: str):
    path = Path(path)
    if not path.exists():
        raise NotFoundError(f"records file does not exist: {path}")
    records = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(validate_record(line))
            except EngSearchError as exc:
                raise InvalidInputError(f"line {i + 1}: {exc}") from exc
    return records


def cmd_ingest(args) -> int:
    records = _read_records(args.records)
    if not records:
        print("warning: no records found; writing an empty index")
    index, stats = ingest_records(records)
    save_shards(index, args.index, shard_count=args.shards)
    print(
        f"ingested {stats.docs} docs "
        f"({stats.drawings} drawings, {stats.documents} documents), "
        f"skipped {stats.skipped}"
    )
    print(f"throughput: {stats.ms_per_doc:.2f} ms/doc over {stats.seconds:.2f} s")
    print(f"shards: {args.shards} -> {args.index}")
    for warning in stats.warnings:
        print(f"warning: {warning}")
    return EXIT_OK


def cmd_index(args) -> int:
    loaded = load_shards(args.index, skip_corrupt=args.skip_corrupt)
    manifest = loaded.manifest
    print(f"index: {args.index}")
    print(f"docs: {len(loaded.index.docs)}  shards: {manifest.shard_count}")
    print(f"embedding_dim: {manifest.embedding_dim}")
    for meta in sorted(manifest.shards, key=lambda m: m["path"]):
        print(f"  {meta['path']}: {meta['doc_count']} docs")
    for name in loaded.corrupt_shards:
        print(f"warning: corrupt shard skipped: {name}")
    if args.check:
        loaded.index.sparse.check_consistency()
        print("consistency: ok")
    return EXIT_OK


def cmd_route(args) -> int:
    for record in _read_records(args.records):
        decision = score_logit(record.kind_features, DEFAULT_ROUTER)
        print(
            json.dumps(
                {
                    "file_id": record.file_id,
                    "label": decision.label.value,
                    "probability": round(decision.probability, 6),
                    "logit": round(decision.logit, 6),
                },
                sort_keys=True,
            )
        )
    return EXIT_OK


def _format_table(response: dict) -> str:
    rows = [("rank", "doc_id", "kind", "s_final", "title")]
    for card in response["results"]:
        rows.append(
            (
                str(card["rank"]),
                card["doc_id"],
                card["kind"],
                f"{card['score']['s_final']:.4f}",
                card["title"] or "",
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    lines = [
        "  ".join(col.ljust(widths[i]) for i, col in enumerate(row[:4])) + "  " + row[4]
        for row in rows
    ]
    total_ms = sum(response["timings_ms"].values())
    lines.append(f"({len(response['results'])} results, {total_ms:.1f} ms)")
    return "\n".join(lines)


def cmd_search(args) -> int:
    engine = build_engine(args.index, args.params)
    spec = parse_query(args.query)
    if args.allowed_types:
        try:
            facet = _parse_allowed_types(args.allowed_types.split(","))
        except ValueError as exc:
            raise UsageError(str(exc))
        spec = dataclasses.replace(spec, allowed_types=facet)
    result = engine.search(spec, args.k)
    response = search_response(result, engine)
    if args.format == "json":
        print(json.dumps(response, indent=2, sort_keys=True))
    else:
        print(_format_table(response))
    return EXIT_OK


def cmd_eval(args) -> int:
    run = load_run(args.run, k=args.k)
    judgments = load_judgments(args.judgments)
    if args.buckets:
        manifest = json.loads(Path(args.buckets).read_text())
        check_buckets(run, manifest)
    # identity pool over whatever the judges covered
    pool = Pool(per_query={qid: judgments.judged_docs(qid) for qid in run.query_ids})
    mode = MODE_MEDIAN if args.mode == "median" else MODE_JUDGE_MEAN
    report = evaluate_run(run, pool, judgments, mode=mode)
    if args.format == "json":
        print(json.dumps(report.to_json(), indent=2, sort_keys=True))
    else:
        print(render_report(report))
    return EXIT_OK


def _judge_fixtures(args):
    queries = {q.query_id: q.text for q in load_queries(args.queries)}
    loaded = load_shards(args.index)
    docs = loaded.index.docs

    def item_provider(query_id: str, doc_id: str) -> JudgeItem:
        entry = docs[doc_id]
        meta = {}
        if entry.fields.get("drawing_number"):
            meta["number"] = entry.fields["drawing_number"]
        elif entry.fields.get("title"):
            meta["title"] = entry.fields["title"]
        return JudgeItem(
            doc_id=doc_id,
            kind=entry.kind.value,
            snippet=" ".join(entry.fields.get("full_text", "").split())[:200],
            metadata=meta,
        )

    client = HttpJudgeClient(args.endpoint) if args.endpoint else StubJudgeClient()
    archive = TranscriptArchive(args.transcripts) if args.transcripts else None
    return queries, item_provider, client, archive


def cmd_judge(args) -> int:
    queries, item_provider, client, archive = _judge_fixtures(args)
    judge_ids = [j for j in args.judges.split(",") if j]
    if not judge_ids:
        raise UsageError("at least one judge id is required")
    if args.protocol == "arena":
        if not (args.run_a and args.run_b):
            raise UsageError("arena requires --run-a and --run-b")
        run_a = load_run(args.run_a, k=args.k)
        run_b = load_run(args.run_b, k=args.k)
        config = JudgeConfig(judge_id=judge_ids[0], template_id=ARENA_TEMPLATE)
        verdicts = arena_campaign(
            run_a,
            run_b,
            queries,
            item_provider,
            config,
            client,
            seed=args.seed,
            deny_list=(run_a.system_id, run_b.system_id),
            archive=archive,
        )
        wins, losses, ties = tally_arena(verdicts, run_a.system_id)
        print(f"{run_a.system_id} vs {run_b.system_id}: "
              f"wins={wins} losses={losses} ties={ties}")
        if wins + losses:
            print(f"win_rate: {100.0 * wins / (wins + losses):.2f}%")
        return EXIT_OK
    if not args.runs:
        raise UsageError("scoring requires --runs")
    runs = [load_run(p, k=args.k) for p in args.runs.split(",")]
    docs = load_shards(args.index).index.docs
    dup_keys = {d: e.dup_key for d, e in docs.items()}
    quality = {d: e.quality for d, e in docs.items()}
    pool = pool_and_dedup(runs, dup_keys, quality)
    judges = [
        JudgeConfig(judge_id=j, template_id=SCORING_TEMPLATE) for j in judge_ids
    ]
    judgments = judge_pool(
        pool,
        queries,
        item_provider,
        judges,
        client,
        deny_list=tuple(r.system_id for r in runs),
        archive=archive,
    )
    if args.output:
        save_judgments(judgments, args.output)
        print(f"wrote {len(judgments.entries)} judgments -> {args.output}")
    else:
        print(f"{len(judgments.entries)} judgments from {len(judges)} judges")
    for note in judgments.coverage_notes:
        print(f"coverage: {note}")
    return EXIT_OK


def cmd_tune(args) -> int:
    engine = build_engine(args.index, args.params)
    queries = load_queries(args.queries)
    validation = [(parse_query(q.text), q.qrels) for q in queries if q.qrels]
    grid = [float(x) for x in args.grid.split(",")] if args.grid else None
    best = tune_lambda(engine, validation, grid=grid, k=args.k)
    print(f"lambda: {best}")
    if args.write_params:
        tuned = dataclasses.replace(
            engine.params,
            fusion=dataclasses.replace(engine.params.fusion, lambda_=best),
        )
        save_params(tuned, args.write_params)
        print(f"params -> {args.write_params}")
    return EXIT_OK


def cmd_serve(args) -> int:
    if args.config:
        config = ServiceConfig.from_file(args.config)
    else:
        config = ServiceConfig.from_env()
    if args.index:
        config.index_path = args.index
    if args.params:
        config.params_path = args.params
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    engine = build_engine(config.index_path, config.params_path)
    print(f"listening on {config.host}:{config.port} "
          f"({len(engine.index.docs)} docs)")
    serve(config, engine)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="engsearch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="stream records into a sharded index")
    p.add_argument("--records", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--shards", type=int, default=4)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="inspect an index on disk")
    p.add_argument("--index", required=True)
    p.add_argument("--skip-corrupt", action="store_true")
    p.add_argument("--check", action="store_true")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("route", help="print routing decisions per record")
    p.add_argument("--records", required=True)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("search", help="query an index")
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--params")
    p.add_argument("--allowed-types")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", help="score a run file against judgments")
    p.add_argument("--run", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--mode", choices=("judge_mean", "median"), default="judge_mean")
    p.add_argument("--buckets")
    p.add_argument("--format", choices=("report", "json"), default="report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("judge", help="run an arena or scoring campaign")
    p.add_argument("--protocol", choices=("arena", "scoring"), required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--judges", default="stub-judge")
    p.add_argument("--run-a")
    p.add_argument("--run-b")
    p.add_argument("--runs")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--endpoint")
    p.add_argument("--transcripts")
    p.add_argument("--output")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("tune", help="grid-search the fusion weight")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--grid")
    p.add_argument("--params")
    p.add_argument("--write-params")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--config")
    p.add_argument("--index")
    p.add_argument("--params")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except JudgeTransportError as exc:
        print(f"external service error: {exc}", file=sys.stderr)
        return EXIT_EXTERNAL
    except (EngSearchError, json.JSONDecodeError, OSError, KeyError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def run() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()
