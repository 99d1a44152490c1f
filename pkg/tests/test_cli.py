"""End-to-end tests for the command-line suite.

Each test drives main() with argv and asserts on stdout/stderr plus the
exit-code contract (0 ok, 1 usage, 2 data, 3 external).
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from engsearch.cli import main
from engsearch.errors import JudgeTransportError
from engsearch.evaluation import RunFile, load_judgments, save_run
from engsearch.fusion import load_params
from engsearch.synth import SynthQuery, write_queries

FIXTURES = Path(__file__).parent / "fixtures"


def _write_records(path: Path) -> None:
    rows = [
        {
            "file_id": "dwg-1",
            "kind_features": {"p_draw": 0.95, "h": 0.9, "cad_prior": 1},
            "full_text": "DWG NO 41X1117\nCOOLING TOWER CT-3\nFACILITY R8E8700",
            "regions": [
                {"kind": "drawing_number", "text": "41X1117"},
                {
                    "kind": "data_block",
                    "text": "DWG NO 41X1117\nCOOLING TOWER CT-3\nFACILITY R8E8700",
                },
            ],
        },
        {
            "file_id": "dwg-2",
            "kind_features": {"p_draw": 0.95, "h": 0.9, "cad_prior": 1},
            "full_text": "DWG NO 42X1134\nFEED PUMP FP-12",
        },
        {
            "file_id": "doc-1",
            "kind_features": {"p_draw": 0.02, "h": 0.02, "cad_prior": 0},
            "full_text": "OPS-412 PUMP PROCEDURE\n1. Isolate the feed pump.",
            "doc_class": "Procedure",
        },
    ]
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))


@pytest.fixture()
def workspace(tmp_path):
    records = tmp_path / "records.jsonl"
    _write_records(records)
    index = tmp_path / "idx"
    assert main(["ingest", "--records", str(records), "--index", str(index)]) == 0
    return tmp_path


# ----------------------------------------------------------------------
# ingest / index


def test_ingest_reports_counts(tmp_path, capsys):
    records = tmp_path / "records.jsonl"
    _write_records(records)
    rc = main(
        ["ingest", "--records", str(records), "--index", str(tmp_path / "idx"),
         "--shards", "2"]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "ingested 3 docs (2 drawings, 1 documents), skipped 0" in out
    assert "ms/doc" in out
    assert (tmp_path / "idx" / "manifest.json").exists()


def test_ingest_missing_records_is_data_error(tmp_path, capsys):
    rc = main(
        ["ingest", "--records", str(tmp_path / "nope.jsonl"),
         "--index", str(tmp_path / "idx")]
    )
    assert rc == 2
    assert "data error" in capsys.readouterr().err


def test_ingest_names_bad_line(tmp_path, capsys):
    records = tmp_path / "records.jsonl"
    records.write_text('{"file_id": "x"}\n')
    rc = main(
        ["ingest", "--records", str(records), "--index", str(tmp_path / "idx")]
    )
    assert rc == 2
    assert "line 1" in capsys.readouterr().err


def test_index_inspects_shards(workspace, capsys):
    rc = main(["index", "--index", str(workspace / "idx"), "--check"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "docs: 3  shards: 4" in out
    assert "consistency: ok" in out


# ----------------------------------------------------------------------
# route


def test_route_prints_one_decision_per_record(workspace, capsys):
    rc = main(["route", "--records", str(workspace / "records.jsonl")])
    lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert rc == 0
    assert [row["label"] for row in lines] == ["Drawing", "Drawing", "Document"]
    assert lines[0]["file_id"] == "dwg-1"
    assert 0.0 <= lines[2]["probability"] <= 1.0


# ----------------------------------------------------------------------
# search


def test_search_table_output(workspace, capsys):
    rc = main(
        ["search", "--index", str(workspace / "idx"),
         "--query", "cooling tower CT-3", "--k", "2"]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert out.splitlines()[0].startswith("rank")
    assert "dwg-1" in out
    assert "(2 results," in out


def test_search_json_output_parses(workspace, capsys):
    rc = main(
        ["search", "--index", str(workspace / "idx"), "--query", "feed pump",
         "--format", "json", "--k", "3"]
    )
    assert rc == 0
    body = json.loads(capsys.readouterr().out)
    assert body["results"][0]["rank"] == 1
    assert body["query"]["normalized_text"] == "feed pump"


def test_search_bad_facet_is_usage_error(workspace, capsys):
    rc = main(
        ["search", "--index", str(workspace / "idx"), "--query", "pump",
         "--allowed-types", "Memo"]
    )
    assert rc == 1
    assert "usage error" in capsys.readouterr().err


def test_search_missing_index_is_data_error(tmp_path, capsys):
    rc = main(["search", "--index", str(tmp_path / "gone"), "--query", "pump"])
    assert rc == 2
    assert "data error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["search", "--frobnicate"]) == 1
    assert "usage error" in capsys.readouterr().err


# ----------------------------------------------------------------------
# eval


def test_eval_report_matches_golden_fixture(capsys):
    rc = main(
        ["eval", "--run", str(FIXTURES / "eval_run.jsonl"),
         "--judgments", str(FIXTURES / "eval_judgments.jsonl"),
         "--buckets", str(FIXTURES / "eval_buckets.json"), "--k", "3"]
    )
    assert rc == 0
    expected = (FIXTURES / "eval_report.txt").read_text()
    assert capsys.readouterr().out == expected


def test_eval_json_output(capsys):
    rc = main(
        ["eval", "--run", str(FIXTURES / "eval_run.jsonl"),
         "--judgments", str(FIXTURES / "eval_judgments.jsonl"),
         "--format", "json"]
    )
    assert rc == 0
    body = json.loads(capsys.readouterr().out)
    assert body["system_id"] == "fusion-rerank"
    assert body["means"]["ndcg@3"]["mean"] == pytest.approx(0.8992, abs=1e-4)


def test_eval_bucket_mismatch_is_data_error(tmp_path, capsys):
    manifest = tmp_path / "buckets.json"
    manifest.write_text(json.dumps({"Vision": 5}))
    rc = main(
        ["eval", "--run", str(FIXTURES / "eval_run.jsonl"),
         "--judgments", str(FIXTURES / "eval_judgments.jsonl"),
         "--buckets", str(manifest)]
    )
    assert rc == 2
    assert "data error" in capsys.readouterr().err


# ----------------------------------------------------------------------
# judge


def _judge_workspace(workspace) -> dict[str, str]:
    queries = workspace / "queries.jsonl"
    write_queries(
        [
            SynthQuery("q1", "cooling tower CT-3", "Vision", {"dwg-1": 2}),
            SynthQuery("q2", "feed pump", "Vision", {"dwg-2": 2}),
        ],
        queries,
    )
    run_a = RunFile(
        system_id="sys-a",
        k=3,
        results={"q1": ["dwg-1", "doc-1"], "q2": ["dwg-2"]},
        buckets={"q1": "Vision", "q2": "Vision"},
    )
    run_b = RunFile(
        system_id="sys-b",
        k=3,
        results={"q1": ["doc-1"], "q2": ["doc-1", "dwg-2"]},
        buckets={"q1": "Vision", "q2": "Vision"},
    )
    save_run(run_a, workspace / "run_a.jsonl")
    save_run(run_b, workspace / "run_b.jsonl")
    return {
        "index": str(workspace / "idx"),
        "queries": str(queries),
        "run_a": str(workspace / "run_a.jsonl"),
        "run_b": str(workspace / "run_b.jsonl"),
    }


def test_judge_scoring_writes_judgments(workspace, capsys):
    paths = _judge_workspace(workspace)
    out_path = workspace / "judgments.jsonl"
    rc = main(
        ["judge", "--protocol", "scoring", "--queries", paths["queries"],
         "--index", paths["index"], "--runs", paths["run_a"],
         "--judges", "stub-a,stub-b", "--output", str(out_path)]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "wrote 6 judgments" in out
    judgments = load_judgments(out_path)
    assert judgments.judges == ["stub-a", "stub-b"]
    assert judgments.grades("q1", "dwg-1") == [2, 2]


def test_judge_scoring_with_transcripts(workspace):
    paths = _judge_workspace(workspace)
    transcripts = workspace / "transcripts.jsonl"
    rc = main(
        ["judge", "--protocol", "scoring", "--queries", paths["queries"],
         "--index", paths["index"], "--runs", paths["run_a"],
         "--transcripts", str(transcripts)]
    )
    assert rc == 0
    rows = [json.loads(l) for l in transcripts.read_text().splitlines()]
    assert rows
    assert all(row["protocol"] == "scoring" for row in rows)


def test_judge_arena_prints_tally(workspace, capsys):
    paths = _judge_workspace(workspace)
    rc = main(
        ["judge", "--protocol", "arena", "--queries", paths["queries"],
         "--index", paths["index"], "--run-a", paths["run_a"],
         "--run-b", paths["run_b"]]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "sys-a vs sys-b:" in out
    assert "wins=" in out


def test_judge_scoring_requires_runs(workspace, capsys):
    paths = _judge_workspace(workspace)
    rc = main(
        ["judge", "--protocol", "scoring", "--queries", paths["queries"],
         "--index", paths["index"]]
    )
    assert rc == 1
    assert "usage error" in capsys.readouterr().err


def test_judge_transport_failure_is_external_error(workspace, capsys, monkeypatch):
    paths = _judge_workspace(workspace)

    class _DownJudge:
        def complete(self, prompt, config):
            raise JudgeTransportError("service unreachable")

    monkeypatch.setattr("engsearch.cli.StubJudgeClient", _DownJudge)
    rc = main(
        ["judge", "--protocol", "scoring", "--queries", paths["queries"],
         "--index", paths["index"], "--runs", paths["run_a"]]
    )
    assert rc == 3
    assert "external service error" in capsys.readouterr().err


# ----------------------------------------------------------------------
# tune


def test_tune_prints_lambda_and_writes_params(workspace, capsys):
    queries = workspace / "queries.jsonl"
    write_queries(
        [
            SynthQuery("q1", "cooling tower CT-3", "Vision", {"dwg-1": 2}),
            SynthQuery("q2", "unlabeled query", "NLP", {}),
        ],
        queries,
    )
    params_path = workspace / "params.json"
    rc = main(
        ["tune", "--index", str(workspace / "idx"), "--queries", str(queries),
         "--grid", "0.0,1.0", "--write-params", str(params_path)]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert out.startswith("lambda: ")
    best = float(out.splitlines()[0].split(": ")[1])
    assert best in (0.0, 1.0)
    assert load_params(params_path).fusion.lambda_ == best


# ----------------------------------------------------------------------
# serve wiring


def test_serve_applies_overrides_without_blocking(workspace, capsys, monkeypatch):
    captured = {}

    def fake_serve(config, engine):
        captured["config"] = config
        captured["docs"] = len(engine.index.docs)

    monkeypatch.setattr("engsearch.cli.serve", fake_serve)
    monkeypatch.delenv("ENGSEARCH_CONFIG", raising=False)
    monkeypatch.delenv("ENGSEARCH_LISTEN", raising=False)
    rc = main(
        ["serve", "--index", str(workspace / "idx"), "--host", "0.0.0.0",
         "--port", "9100"]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "listening on 0.0.0.0:9100 (3 docs)" in out
    assert captured["config"].port == 9100
    assert captured["docs"] == 3
