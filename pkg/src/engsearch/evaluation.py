"""Benchmark harness: run files, pooled judging, and metric reports.

A run file holds one system's ranked lists. Pools merge all systems'
top-k per query and collapse near-duplicates so judges never grade the
same drawing twice under different revisions. Reports aggregate
query-level scores with bootstrap intervals and paired significance
tests; nothing here hard-codes the query-set size, which always comes
from the run files and manifest.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import InvalidInputError
from .metrics import (
    MAP_EQ2,
    MAP_GE1,
    BootstrapConfig,
    MeanCI,
    aggregate,
    is_relevant,
    map_at_k,
    ndcg_at_k,
    paired_randomization_test,
    prf_success,
    win_rate,
)

BUCKETS = ("Vision", "NLP", "MultiModal")

MODE_MEDIAN = "median"
MODE_JUDGE_MEAN = "judge_mean"


# ----------------------------------------------------------------------
# Run files and judgments


@dataclass
class RunFile:
    system_id: str
    k: int = 3
    results: dict[str, list[str]] = field(default_factory=dict)
    buckets: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for qid, docs in self.results.items():
            if len(docs) > self.k:
                raise InvalidInputError(f"{qid}: more than k={self.k} results")
            if len(set(docs)) != len(docs):
                raise InvalidInputError(f"{qid}: duplicate doc_id in ranked list")

    @property
    def query_ids(self) -> list[str]:
        return sorted(self.results)


def load_run(path: str | Path, system_id: str | None = None, k: int = 3) -> RunFile:
    path = Path(path)
    results: dict[str, list[str]] = {}
    buckets: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            qid = row["query_id"]
            if qid in results:
                raise InvalidInputError(f"duplicate query_id in run: {qid}")
            results[qid] = list(row["results"])
            buckets[qid] = row.get("bucket", "")
            system_id = system_id or row.get("system_id")
    return RunFile(
        system_id=system_id or path.stem, k=k, results=results, buckets=buckets
    )


def save_run(run: RunFile, path: str | Path) -> None:
    with open(path, "w") as fh:
        for qid in run.query_ids:
            fh.write(
                json.dumps(
                    {
                        "query_id": qid,
                        "bucket": run.buckets.get(qid, ""),
                        "results": run.results[qid],
                        "system_id": run.system_id,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def check_buckets(run: RunFile, manifest: Mapping[str, int]) -> None:
    """Compare per-bucket query counts against the campaign manifest."""
    counts: dict[str, int] = {}
    for qid in run.results:
        bucket = run.buckets.get(qid, "")
        counts[bucket] = counts.get(bucket, 0) + 1
    if counts != dict(manifest):
        raise InvalidInputError(f"bucket counts {counts} do not match {dict(manifest)}")


@dataclass
class JudgmentSet:
    entries: dict[tuple[str, str, str], int] = field(default_factory=dict)
    coverage_notes: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for key, grade in self.entries.items():
            if grade not in (0, 1, 2):
                raise InvalidInputError(f"{key}: grade {grade!r} not in (0, 1, 2)")

    @property
    def judges(self) -> list[str]:
        return sorted({judge for _, _, judge in self.entries})

    def add(self, query_id: str, doc_id: str, judge_id: str, grade: int) -> None:
        key = (query_id, doc_id, judge_id)
        if key in self.entries:
            raise InvalidInputError(f"duplicate judgment for {key}")
        if grade not in (0, 1, 2):
            raise InvalidInputError(f"grade {grade!r} not in (0, 1, 2)")
        self.entries[key] = grade

    def grades(self, query_id: str, doc_id: str) -> list[int]:
        return [
            g
            for (qid, did, _), g in sorted(self.entries.items())
            if qid == query_id and did == doc_id
        ]

    def median_grade(self, query_id: str, doc_id: str) -> int | None:
        grades = self.grades(query_id, doc_id)
        if not grades:
            return None
        # median_low keeps even splits conservative and in-scale
        return int(statistics.median_low(grades))

    def judge_grade(self, query_id: str, doc_id: str, judge_id: str) -> int | None:
        return self.entries.get((query_id, doc_id, judge_id))

    def judged_docs(self, query_id: str) -> list[str]:
        return sorted({did for (qid, did, _) in self.entries if qid == query_id})


def load_judgments(path: str | Path) -> JudgmentSet:
    js = JudgmentSet()
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            js.add(row["query_id"], row["doc_id"], row["judge_id"], int(row["grade"]))
    return js


def save_judgments(judgments: JudgmentSet, path: str | Path) -> None:
    with open(path, "w") as fh:
        for (qid, did, judge), grade in sorted(judgments.entries.items()):
            fh.write(
                json.dumps(
                    {
                        "query_id": qid,
                        "doc_id": did,
                        "judge_id": judge,
                        "grade": grade,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


# ----------------------------------------------------------------------
# Pooling


@dataclass
class Pool:
    per_query: dict[str, list[str]] = field(default_factory=dict)
    rep_map: dict[str, dict[str, str]] = field(default_factory=dict)
    dropped: list[str] = field(default_factory=list)

    def representative(self, query_id: str, doc_id: str) -> str:
        return self.rep_map.get(query_id, {}).get(doc_id, doc_id)


def pool_and_dedup(
    runs: Sequence[RunFile],
    dup_keys: Mapping[str, str],
    quality: Mapping[str, float] | None = None,
) -> Pool:
    """Merge all systems' results per query, one doc per duplicate group.

    The highest-quality group member represents the group; docs with no
    known duplicate key are dropped as corrupt and listed.
    """
    if not runs:
        raise InvalidInputError("no runs to pool")
    reference = set(runs[0].results)
    for run in runs[1:]:
        unknown = set(run.results) ^ reference
        if unknown:
            raise InvalidInputError(
                f"run {run.system_id} query set mismatch: {sorted(unknown)[:5]}"
            )
    quality = quality or {}
    pool = Pool()
    for qid in sorted(reference):
        groups: dict[str, list[str]] = {}
        for run in runs:
            for doc_id in run.results[qid]:
                if doc_id not in dup_keys:
                    if doc_id not in pool.dropped:
                        pool.dropped.append(doc_id)
                    continue
                groups.setdefault(dup_keys[doc_id], [])
                if doc_id not in groups[dup_keys[doc_id]]:
                    groups[dup_keys[doc_id]].append(doc_id)
        reps: list[str] = []
        mapping: dict[str, str] = {}
        for _, members in sorted(groups.items()):
            rep = min(members, key=lambda d: (-quality.get(d, 0.5), d))
            reps.append(rep)
            for member in members:
                mapping[member] = rep
        pool.per_query[qid] = sorted(reps)
        pool.rep_map[qid] = mapping
    return pool


# ----------------------------------------------------------------------
# Reports


def metric_names(k: int) -> tuple[str, ...]:
    return (
        f"ndcg@{k}",
        f"map@{k}_ge1",
        f"map@{k}_eq2",
        f"p@{k}",
        f"r@{k}",
        "succ@1",
        f"succ@{k}",
    )


def _query_metrics(
    ranked_grades: list[int], pool_grades: list[int], k: int
) -> dict[str, float]:
    r_ge1 = sum(1 for g in pool_grades if is_relevant(g, MAP_GE1))
    r_eq2 = sum(1 for g in pool_grades if is_relevant(g, MAP_EQ2))
    p, r, succ = prf_success(ranked_grades, k, r_ge1)
    _, _, succ1 = prf_success(ranked_grades, 1, r_ge1)
    return {
        f"ndcg@{k}": ndcg_at_k(ranked_grades, k, pool_grades),
        f"map@{k}_ge1": map_at_k(ranked_grades, k, MAP_GE1, r_ge1),
        f"map@{k}_eq2": map_at_k(ranked_grades, k, MAP_EQ2, r_eq2),
        f"p@{k}": p,
        f"r@{k}": r,
        "succ@1": succ1,
        f"succ@{k}": succ,
    }


def _grades_under(
    judgments: JudgmentSet, qid: str, doc_ids: Iterable[str], judge_id: str | None
) -> list[int]:
    grades = []
    for doc_id in doc_ids:
        if judge_id is None:
            g = judgments.median_grade(qid, doc_id)
        else:
            g = judgments.judge_grade(qid, doc_id, judge_id)
        grades.append(0 if g is None else g)
    return grades


@dataclass
class MetricReport:
    system_id: str
    k: int
    mode: str
    per_query: dict[str, dict[str, float]]
    means: dict[str, MeanCI]
    per_bucket: dict[str, dict[str, MeanCI]]

    def values(self, metric: str) -> list[float]:
        return [self.per_query[metric][qid] for qid in sorted(self.per_query[metric])]

    def to_json(self) -> dict:
        return {
            "system_id": self.system_id,
            "k": self.k,
            "mode": self.mode,
            "means": {m: ci.to_json() for m, ci in self.means.items()},
            "per_bucket": {
                b: {m: ci.to_json() for m, ci in row.items()}
                for b, row in self.per_bucket.items()
            },
            "per_query": self.per_query,
        }


def evaluate_run(
    run: RunFile,
    pool: Pool,
    judgments: JudgmentSet,
    mode: str = MODE_JUDGE_MEAN,
    bootstrap: BootstrapConfig | None = None,
) -> MetricReport:
    """Score one system against pooled judgments.

    judge_mean mode computes each query's metrics once per judge and
    averages; median mode grades each item by the judges' median first.
    """
    if mode not in (MODE_MEDIAN, MODE_JUDGE_MEAN):
        raise InvalidInputError(f"unknown evaluation mode {mode!r}")
    judges = judgments.judges if mode == MODE_JUDGE_MEAN else [None]
    if not judges:
        raise InvalidInputError("judgment set has no judges")
    per_query: dict[str, dict[str, float]] = {m: {} for m in metric_names(run.k)}
    for qid in run.query_ids:
        ranked_reps = [pool.representative(qid, d) for d in run.results[qid]]
        pool_docs = pool.per_query.get(qid, [])
        acc: dict[str, float] = {m: 0.0 for m in metric_names(run.k)}
        for judge in judges:
            ranked_grades = _grades_under(judgments, qid, ranked_reps, judge)
            pool_grades = _grades_under(judgments, qid, pool_docs, judge)
            for m, v in _query_metrics(ranked_grades, pool_grades, run.k).items():
                acc[m] += v
        for m in acc:
            per_query[m][qid] = acc[m] / len(judges)

    means = {m: aggregate(list(vals.values()), bootstrap) for m, vals in per_query.items()}
    per_bucket: dict[str, dict[str, MeanCI]] = {}
    buckets = sorted({b for b in run.buckets.values() if b})
    for bucket in buckets:
        qids = [q for q in run.query_ids if run.buckets.get(q) == bucket]
        if not qids:
            continue
        per_bucket[bucket] = {
            m: aggregate([per_query[m][q] for q in qids], bootstrap)
            for m in per_query
        }
    return MetricReport(
        system_id=run.system_id,
        k=run.k,
        mode=mode,
        per_query=per_query,
        means=means,
        per_bucket=per_bucket,
    )


@dataclass(frozen=True)
class WinLossTie:
    wins: int
    losses: int
    ties: int

    @property
    def rate(self) -> float:
        return win_rate(self.wins, self.losses, self.ties)

    def to_json(self) -> dict:
        return {
            "wins": self.wins,
            "losses": self.losses,
            "ties": self.ties,
            "win_rate": self.rate if self.wins + self.losses else None,
        }


def tally_pairwise(values_a: Sequence[float], values_b: Sequence[float]) -> WinLossTie:
    if len(values_a) != len(values_b):
        raise InvalidInputError("pairwise tallies need equal-length lists")
    wins = sum(1 for a, b in zip(values_a, values_b) if a > b)
    losses = sum(1 for a, b in zip(values_a, values_b) if a < b)
    return WinLossTie(wins=wins, losses=losses, ties=len(values_a) - wins - losses)


@dataclass
class Comparison:
    system_a: str
    system_b: str
    metric: str
    p_value: float
    tally: WinLossTie
    per_bucket_p: dict[str, float]

    def to_json(self) -> dict:
        return {
            "system_a": self.system_a,
            "system_b": self.system_b,
            "metric": self.metric,
            "p_value": self.p_value,
            "tally": self.tally.to_json(),
            "per_bucket_p": self.per_bucket_p,
        }


def compare_systems(
    report_a: MetricReport,
    report_b: MetricReport,
    metric: str,
    buckets: Mapping[str, str] | None = None,
    permutations: int = 10_000,
    seed: int = 0,
) -> Comparison:
    """Paired sign-flip test plus win/loss/tie tally on a shared metric."""
    if metric not in report_a.per_query or metric not in report_b.per_query:
        raise InvalidInputError(f"metric {metric!r} missing from a report")
    qids = sorted(set(report_a.per_query[metric]) & set(report_b.per_query[metric]))
    if not qids:
        raise InvalidInputError("no shared queries to compare")
    a = [report_a.per_query[metric][q] for q in qids]
    b = [report_b.per_query[metric][q] for q in qids]
    per_bucket_p: dict[str, float] = {}
    if buckets:
        for bucket in sorted(set(buckets.values())):
            sub = [q for q in qids if buckets.get(q) == bucket]
            if len(sub) >= 2:
                per_bucket_p[bucket] = paired_randomization_test(
                    [report_a.per_query[metric][q] for q in sub],
                    [report_b.per_query[metric][q] for q in sub],
                    permutations,
                    seed,
                )
    return Comparison(
        system_a=report_a.system_id,
        system_b=report_b.system_id,
        metric=metric,
        p_value=paired_randomization_test(a, b, permutations, seed),
        tally=tally_pairwise(a, b),
        per_bucket_p=per_bucket_p,
    )


# ----------------------------------------------------------------------
# Rendering


def render_report(report: MetricReport) -> str:
    """Aligned-column text table: one metric per row, buckets as columns."""
    buckets = sorted(report.per_bucket)
    header = ["metric", "mean", "95% CI"] + buckets
    rows = [header]
    for m in metric_names(report.k):
        ci = report.means[m]
        row = [m, f"{ci.mean:.4f}", f"[{ci.lo:.4f}, {ci.hi:.4f}]"]
        row += [f"{report.per_bucket[b][m].mean:.4f}" for b in buckets]
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    title = f"system={report.system_id}  k={report.k}  mode={report.mode}  n={report.means[metric_names(report.k)[0]].n}"
    return "\n".join([title] + lines)


def render_comparison(comparison: Comparison) -> str:
    t = comparison.tally
    rate = f"{t.rate:.2f}%" if t.wins + t.losses else "n/a"
    lines = [
        f"{comparison.system_a} vs {comparison.system_b} on {comparison.metric}",
        f"  wins={t.wins}  losses={t.losses}  ties={t.ties}  win_rate={rate}",
        f"  paired randomization p={comparison.p_value:.4f}",
    ]
    for bucket, p in sorted(comparison.per_bucket_p.items()):
        lines.append(f"    {bucket}: p={p:.4f}")
    return "\n".join(lines)
