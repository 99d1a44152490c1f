"""Tests for run files, pooled deduplication, and metric reports."""

from __future__ import annotations

import pytest

from oracles import ap_ref, ndcg_ref

from engsearch.errors import InvalidInputError
from engsearch.evaluation import (
    Comparison,
    JudgmentSet,
    MetricReport,
    Pool,
    RunFile,
    WinLossTie,
    check_buckets,
    compare_systems,
    evaluate_run,
    load_judgments,
    load_run,
    metric_names,
    pool_and_dedup,
    render_comparison,
    render_report,
    save_judgments,
    save_run,
    tally_pairwise,
)
from engsearch.metrics import BootstrapConfig

_FAST = BootstrapConfig(resamples=200)


# ----------------------------------------------------------------------
# Run files


def test_run_file_rejects_overlong_lists():
    with pytest.raises(InvalidInputError):
        RunFile(system_id="s", k=2, results={"q1": ["a", "b", "c"]})


def test_run_file_rejects_duplicate_docs():
    with pytest.raises(InvalidInputError):
        RunFile(system_id="s", k=3, results={"q1": ["a", "a"]})


def test_run_file_query_ids_sorted():
    run = RunFile(system_id="s", results={"q2": ["a"], "q1": ["b"]})
    assert run.query_ids == ["q1", "q2"]


def test_run_round_trip_and_system_id(tmp_path):
    run = RunFile(
        system_id="hybrid",
        k=3,
        results={"q1": ["d2", "d1"], "q2": ["d3"]},
        buckets={"q1": "Vision", "q2": "NLP"},
    )
    path = tmp_path / "run.jsonl"
    save_run(run, path)
    loaded = load_run(path)
    assert loaded.system_id == "hybrid"
    assert loaded.results == run.results
    assert loaded.buckets == run.buckets
    # saving again produces identical bytes
    second = tmp_path / "run2.jsonl"
    save_run(loaded, second)
    assert path.read_bytes() == second.read_bytes()


def test_load_run_rejects_duplicate_query(tmp_path):
    path = tmp_path / "run.jsonl"
    row = '{"query_id": "q1", "results": ["a"], "system_id": "s"}\n'
    path.write_text(row + row)
    with pytest.raises(InvalidInputError):
        load_run(path)


def test_check_buckets_against_manifest():
    run = RunFile(
        system_id="s",
        results={"q1": ["a"], "q2": ["b"], "q3": ["c"]},
        buckets={"q1": "Vision", "q2": "Vision", "q3": "NLP"},
    )
    check_buckets(run, {"Vision": 2, "NLP": 1})
    with pytest.raises(InvalidInputError):
        check_buckets(run, {"Vision": 1, "NLP": 2})


# ----------------------------------------------------------------------
# Judgments


def test_judgments_reject_bad_grade_and_duplicates():
    js = JudgmentSet()
    js.add("q1", "d1", "judge-a", 2)
    with pytest.raises(InvalidInputError):
        js.add("q1", "d1", "judge-a", 1)
    with pytest.raises(InvalidInputError):
        js.add("q1", "d2", "judge-a", 3)


def test_judgments_median_uses_low_median():
    js = JudgmentSet()
    js.add("q1", "d1", "a", 1)
    js.add("q1", "d1", "b", 2)
    assert js.median_grade("q1", "d1") == 1
    js.add("q1", "d1", "c", 2)
    assert js.median_grade("q1", "d1") == 2
    assert js.median_grade("q1", "ghost") is None


def test_judgments_lookup_helpers():
    js = JudgmentSet()
    js.add("q1", "d2", "b", 0)
    js.add("q1", "d1", "a", 2)
    js.add("q2", "d1", "a", 1)
    assert js.judges == ["a", "b"]
    assert js.judged_docs("q1") == ["d1", "d2"]
    assert js.judge_grade("q1", "d1", "a") == 2
    assert js.judge_grade("q1", "d1", "b") is None


def test_judgments_round_trip_deterministic(tmp_path):
    js = JudgmentSet()
    js.add("q2", "d1", "b", 1)
    js.add("q1", "d9", "a", 2)
    js.add("q1", "d2", "a", 0)
    first = tmp_path / "j1.jsonl"
    second = tmp_path / "j2.jsonl"
    save_judgments(js, first)
    loaded = load_judgments(first)
    assert loaded.entries == js.entries
    save_judgments(loaded, second)
    assert first.read_bytes() == second.read_bytes()


# ----------------------------------------------------------------------
# Pooling


def _runs():
    a = RunFile(system_id="a", results={"q1": ["d1", "d2"], "q2": ["d3"]})
    b = RunFile(system_id="b", results={"q1": ["d2", "d4"], "q2": ["d5"]})
    return [a, b]


def test_pool_merges_runs_and_dedups():
    dup_keys = {"d1": "g1", "d2": "g1", "d4": "g2", "d3": "g3", "d5": "g4"}
    quality = {"d1": 0.9, "d2": 0.5}
    pool = pool_and_dedup(_runs(), dup_keys, quality)
    # d1 and d2 share a group; higher-quality d1 represents it
    assert pool.per_query["q1"] == ["d1", "d4"]
    assert pool.representative("q1", "d2") == "d1"
    assert pool.representative("q1", "d4") == "d4"
    assert pool.per_query["q2"] == ["d3", "d5"]
    assert pool.dropped == []


def test_pool_rep_tie_breaks_by_doc_id():
    runs = [RunFile(system_id="a", results={"q1": ["d2", "d1"]})]
    pool = pool_and_dedup(runs, {"d1": "g", "d2": "g"})
    assert pool.per_query["q1"] == ["d1"]


def test_pool_drops_unknown_dup_keys():
    runs = [RunFile(system_id="a", results={"q1": ["d1", "mystery"]})]
    pool = pool_and_dedup(runs, {"d1": "g1"})
    assert pool.per_query["q1"] == ["d1"]
    assert pool.dropped == ["mystery"]


def test_pool_requires_matching_query_sets():
    a = RunFile(system_id="a", results={"q1": ["d1"]})
    b = RunFile(system_id="b", results={"q2": ["d1"]})
    with pytest.raises(InvalidInputError):
        pool_and_dedup([a, b], {"d1": "g1"})
    with pytest.raises(InvalidInputError):
        pool_and_dedup([], {})


def test_pool_representative_identity_fallback():
    pool = Pool()
    assert pool.representative("q9", "d9") == "d9"


# ----------------------------------------------------------------------
# Reports


def _single_judge_setup():
    run = RunFile(
        system_id="s",
        k=3,
        results={"q1": ["d1", "d2", "d3"]},
        buckets={"q1": "Vision"},
    )
    js = JudgmentSet()
    for doc, grade in (("d1", 2), ("d2", 0), ("d3", 1), ("d4", 1)):
        js.add("q1", doc, "judge-a", grade)
    pool = Pool(per_query={"q1": ["d1", "d2", "d3", "d4"]})
    return run, pool, js


def test_metric_names_cover_the_reported_set():
    assert metric_names(3) == (
        "ndcg@3",
        "map@3_ge1",
        "map@3_eq2",
        "p@3",
        "r@3",
        "succ@1",
        "succ@3",
    )


def test_evaluate_run_single_judge_hand_values():
    run, pool, js = _single_judge_setup()
    report = evaluate_run(run, pool, js, bootstrap=_FAST)
    got = {m: report.per_query[m]["q1"] for m in metric_names(3)}
    assert got["ndcg@3"] == pytest.approx(ndcg_ref([2, 0, 1], 3, [2, 0, 1, 1]), abs=1e-12)
    assert got["map@3_ge1"] == pytest.approx(
        ap_ref([2, 0, 1], 3, lambda g: g >= 1, 3), abs=1e-12
    )
    assert got["map@3_eq2"] == pytest.approx(
        ap_ref([2, 0, 1], 3, lambda g: g == 2, 1), abs=1e-12
    )
    assert got["p@3"] == pytest.approx(2 / 3)
    assert got["r@3"] == pytest.approx(2 / 3)
    assert got["succ@1"] == 1.0
    assert got["succ@3"] == 1.0
    assert report.per_bucket["Vision"]["ndcg@3"].mean == pytest.approx(got["ndcg@3"])


def test_evaluate_run_judge_mean_averages_per_judge():
    run, pool, js = _single_judge_setup()
    # second judge flips d1 and d3 to zero: succ@3 drops for them alone
    for doc, grade in (("d1", 0), ("d2", 0), ("d3", 0), ("d4", 1)):
        js.add("q1", doc, "judge-b", grade)
    report = evaluate_run(run, pool, js, mode="judge_mean", bootstrap=_FAST)
    assert report.per_query["succ@3"]["q1"] == pytest.approx(0.5)
    a_ndcg = ndcg_ref([2, 0, 1], 3, [2, 0, 1, 1])
    assert report.per_query["ndcg@3"]["q1"] == pytest.approx((a_ndcg + 0.0) / 2)


def test_evaluate_run_median_mode_grades_first():
    run, pool, js = _single_judge_setup()
    for doc, grade in (("d1", 0), ("d2", 0), ("d3", 0), ("d4", 1)):
        js.add("q1", doc, "judge-b", grade)
    report = evaluate_run(run, pool, js, mode="median", bootstrap=_FAST)
    # median_low([0, 2]) = 0 for d1, so the ranked list grades as [0, 0, 0]
    assert report.per_query["succ@3"]["q1"] == 0.0
    assert report.mode == "median"


def test_evaluate_run_resolves_representatives():
    run = RunFile(system_id="s", k=3, results={"q1": ["d2"]})
    pool = Pool(per_query={"q1": ["d1"]}, rep_map={"q1": {"d2": "d1"}})
    js = JudgmentSet()
    js.add("q1", "d1", "a", 2)
    report = evaluate_run(run, pool, js, bootstrap=_FAST)
    assert report.per_query["succ@1"]["q1"] == 1.0


def test_evaluate_run_unjudged_docs_grade_zero():
    run = RunFile(system_id="s", k=3, results={"q1": ["ghost"]})
    js = JudgmentSet()
    js.add("q1", "d1", "a", 1)
    report = evaluate_run(run, Pool(per_query={"q1": ["d1"]}), js, bootstrap=_FAST)
    assert report.per_query["succ@3"]["q1"] == 0.0


def test_evaluate_run_rejects_unknown_mode():
    run, pool, js = _single_judge_setup()
    with pytest.raises(InvalidInputError):
        evaluate_run(run, pool, js, mode="mystery")
    with pytest.raises(InvalidInputError):
        evaluate_run(run, pool, JudgmentSet(), mode="judge_mean")


def test_report_values_ordered_by_query():
    run = RunFile(system_id="s", k=1, results={"q2": ["d1"], "q1": ["d2"]})
    js = JudgmentSet()
    js.add("q1", "d2", "a", 0)
    js.add("q2", "d1", "a", 2)
    pool = Pool(per_query={"q1": ["d2"], "q2": ["d1"]})
    report = evaluate_run(run, pool, js, bootstrap=_FAST)
    assert report.values("succ@1") == [0.0, 1.0]


def test_report_json_shape():
    run, pool, js = _single_judge_setup()
    blob = evaluate_run(run, pool, js, bootstrap=_FAST).to_json()
    assert blob["system_id"] == "s"
    assert set(blob["means"]) == set(metric_names(3))
    assert "Vision" in blob["per_bucket"]
    ci = blob["means"]["ndcg@3"]
    assert ci["lo"] <= ci["mean"] <= ci["hi"]


# ----------------------------------------------------------------------
# Pairwise comparison


def test_tally_pairwise_counts():
    tally = tally_pairwise([1.0, 0.5, 0.2, 0.7], [0.9, 0.5, 0.4, 0.1])
    assert (tally.wins, tally.losses, tally.ties) == (2, 1, 1)
    assert tally.rate == pytest.approx(100 * 2 / 3)


def test_tally_json_rate_null_when_all_tied():
    assert WinLossTie(0, 0, 5).to_json()["win_rate"] is None
    with pytest.raises(InvalidInputError):
        tally_pairwise([1.0], [1.0, 2.0])


def _two_reports():
    def mk(system_id, scores):
        return MetricReport(
            system_id=system_id,
            k=3,
            mode="judge_mean",
            per_query={"ndcg@3": scores},
            means={},
            per_bucket={},
        )

    a = mk("on", {"q1": 0.9, "q2": 0.8, "q3": 0.7, "q4": 0.6})
    b = mk("off", {"q1": 0.5, "q2": 0.6, "q3": 0.5, "q4": 0.6})
    return a, b


def test_compare_systems_tally_and_p_value():
    a, b = _two_reports()
    cmp = compare_systems(a, b, "ndcg@3")
    assert (cmp.tally.wins, cmp.tally.losses, cmp.tally.ties) == (3, 0, 1)
    # exhaustive sign-flip over 4 diffs with one zero: 4 of 16 flips
    # reach |observed|, including both signs of the zero diff
    assert cmp.p_value == pytest.approx(4 / 16)


def test_compare_systems_per_bucket_needs_two_queries():
    a, b = _two_reports()
    buckets = {"q1": "Vision", "q2": "Vision", "q3": "Vision", "q4": "NLP"}
    cmp = compare_systems(a, b, "ndcg@3", buckets=buckets)
    assert "Vision" in cmp.per_bucket_p
    assert "NLP" not in cmp.per_bucket_p


def test_compare_systems_missing_metric():
    a, b = _two_reports()
    with pytest.raises(InvalidInputError):
        compare_systems(a, b, "map@3_ge1")


# ----------------------------------------------------------------------
# Rendering


def test_render_report_layout():
    run, pool, js = _single_judge_setup()
    text = render_report(evaluate_run(run, pool, js, bootstrap=_FAST))
    lines = text.splitlines()
    assert lines[0].startswith("system=s")
    assert "n=1" in lines[0]
    assert lines[1].split() == ["metric", "mean", "95%", "CI", "Vision"]
    assert any(line.startswith("ndcg@3") for line in lines)
    assert len(lines) == 2 + 1 + len(metric_names(3))


def test_render_comparison_mentions_counts():
    comparison = Comparison(
        system_a="on",
        system_b="off",
        metric="ndcg@3",
        p_value=0.0312,
        tally=WinLossTie(5, 1, 2),
        per_bucket_p={"Vision": 0.25},
    )
    text = render_comparison(comparison)
    assert "wins=5" in text
    assert "p=0.0312" in text
    assert "Vision: p=0.2500" in text


def test_render_comparison_no_decisives():
    comparison = Comparison(
        system_a="a",
        system_b="b",
        metric="ndcg@3",
        p_value=1.0,
        tally=WinLossTie(0, 0, 3),
        per_bucket_p={},
    )
    assert "win_rate=n/a" in render_comparison(comparison)
