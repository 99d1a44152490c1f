"""LLM judge protocols: pairwise arena and independent 0/1/2 scoring.

Both protocols render a fixed instruction template, append the query
and candidate payload, and demand strict JSON back. Responses get one
bounded retry on malformed output; after that the pairing or batch is
excluded and noted, never guessed. A deterministic offline stub judge
makes whole benchmark runs reproducible byte for byte.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from random import Random
from typing import Callable, Iterable, Mapping, Protocol, Sequence

from .errors import InvalidInputError, JudgeFormatError, JudgeTransportError
from .evaluation import JudgmentSet, Pool, RunFile
from .index import tokenize

ARENA_TEMPLATE = "arena_v1"
SCORING_TEMPLATE = "scoring_v1"

_RETRY_REMINDER = "\n\nReturn STRICT JSON ONLY."


@dataclass(frozen=True)
class JudgeConfig:
    judge_id: str
    endpoint: str = "stub"
    temperature: float = 0.0
    top_p: float = 1.0
    max_tokens: int = 4000
    template_id: str = SCORING_TEMPLATE
    timeout: float = 30.0
    retries: int = 1

    def __post_init__(self) -> None:
        # Benchmark decoding is pinned; exploratory settings belong in
        # ad-hoc scripts, not in this client.
        if self.temperature != 0.0 or self.top_p != 1.0:
            raise InvalidInputError("judge decoding must use temperature=0, top_p=1")
        if self.max_tokens < 1 or self.retries < 0:
            raise InvalidInputError("max_tokens must be >= 1 and retries >= 0")


class ChatClient(Protocol):
    """Single prompt in, single text completion out."""

    def complete(self, prompt: str, config: JudgeConfig) -> str: ...


def load_template(template_id: str) -> str:
    name = f"{template_id}.txt"
    ref = resources.files("engsearch.templates").joinpath(name)
    try:
        return ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InvalidInputError(f"unknown prompt template {template_id!r}")


# ----------------------------------------------------------------------
# Payload rendering


@dataclass(frozen=True)
class JudgeItem:
    doc_id: str
    kind: str
    snippet: str
    metadata: dict = field(default_factory=dict)


def _metadata_text(item: JudgeItem) -> str:
    pairs = [f"{k}={item.metadata[k]}" for k in sorted(item.metadata)]
    return "; ".join(pairs) if pairs else "none"


def _allowed_text(allowed_types: Iterable[str] | None) -> str:
    if not allowed_types:
        return "unspecified"
    return ", ".join(sorted(allowed_types))


def render_arena_prompt(
    query_text: str,
    items_a: Sequence[JudgeItem],
    items_b: Sequence[JudgeItem],
    allowed_types: Iterable[str] | None = None,
) -> str:
    lines = [load_template(ARENA_TEMPLATE).rstrip(), "", "----", f"Query: {query_text}"]
    lines.append(f"Allowed types: {_allowed_text(allowed_types)}")
    for label, items in (("A", items_a), ("B", items_b)):
        lines.append("")
        lines.append(f"System {label} results:")
        for rank, item in enumerate(items, start=1):
            lines.append(
                f"{rank}. kind={item.kind}; id={item.doc_id}; "
                f"{_metadata_text(item)}; snippet: {item.snippet}"
            )
    return "\n".join(lines)


def render_scoring_prompt(
    query_text: str,
    items: Sequence[JudgeItem],
    allowed_types: Iterable[str] | None = None,
) -> tuple[str, dict[str, str]]:
    """Returns the prompt and the anonymized item_id -> doc_id mapping."""
    lines = [
        load_template(SCORING_TEMPLATE).rstrip(),
        "",
        "----",
        f"Query: {query_text}",
        f"Allowed types: {_allowed_text(allowed_types)}",
        "",
        "Results:",
    ]
    mapping: dict[str, str] = {}
    for rank, item in enumerate(items, start=1):
        item_id = f"SYSTEM-RANK{rank}"
        mapping[item_id] = item.doc_id
        lines.append(
            f"rank={rank} item_id={item_id} kind={item.kind} snippet: {item.snippet}"
        )
    return "\n".join(lines), mapping


def assert_anonymized(prompt: str, deny_list: Iterable[str]) -> None:
    """Rendered prompts must never leak system or model identities."""
    lowered = prompt.lower()
    for name in deny_list:
        if name and name.lower() in lowered:
            raise InvalidInputError(f"prompt leaks denied name {name!r}")


# ----------------------------------------------------------------------
# Verdict parsing


@dataclass(frozen=True)
class ArenaVerdict:
    winner: str  # A, B, or Tie
    explanation: str
    position_map: dict[str, str] = field(default_factory=dict)

    def winning_system(self) -> str | None:
        """System id after de-mapping; None for a tie."""
        if self.winner == "Tie":
            return None
        return self.position_map.get(self.winner, self.winner)


@dataclass(frozen=True)
class ScoreSheet:
    grades: dict[str, int]

    def by_doc(self, mapping: Mapping[str, str]) -> dict[str, int]:
        return {mapping[item_id]: g for item_id, g in self.grades.items()}


def _extract_json(text: str) -> dict:
    text = text.strip()
    try:
        parsed = json.loads(text)
        if isinstance(parsed, dict):
            return parsed
    except json.JSONDecodeError:
        pass
    start = text.find("{")
    while start != -1:
        depth = 0
        for i in range(start, len(text)):
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
                if depth == 0:
                    try:
                        parsed = json.loads(text[start : i + 1])
                        if isinstance(parsed, dict):
                            return parsed
                    except json.JSONDecodeError:
                        break
        start = text.find("{", start + 1)
    raise JudgeFormatError("no JSON object in judge response")


def parse_arena_verdict(text: str, position_map: dict[str, str]) -> ArenaVerdict:
    raw = _extract_json(text)
    winner = raw.get("winner")
    if isinstance(winner, str) and winner.lower() == "tie":
        winner = "Tie"
    if winner not in ("A", "B", "Tie"):
        raise JudgeFormatError(f"invalid winner {raw.get('winner')!r}")
    explanation = raw.get("explanation")
    if not isinstance(explanation, str):
        raise JudgeFormatError("missing explanation string")
    return ArenaVerdict(winner=winner, explanation=explanation, position_map=position_map)


def parse_score_sheet(text: str, expected_ids: Sequence[str]) -> ScoreSheet:
    raw = _extract_json(text)
    ratings = raw.get("ratings")
    if not isinstance(ratings, list):
        raise JudgeFormatError("missing ratings list")
    grades: dict[str, int] = {}
    for entry in ratings:
        if not isinstance(entry, dict):
            raise JudgeFormatError("rating entry is not an object")
        item_id = entry.get("item_id")
        score = entry.get("score")
        if item_id not in expected_ids:
            raise JudgeFormatError(f"unexpected item_id {item_id!r}")
        if item_id in grades:
            raise JudgeFormatError(f"duplicate rating for {item_id!r}")
        if score not in (0, 1, 2):
            # strict contract: out-of-range scores are rejected, not clamped
            raise JudgeFormatError(f"score {score!r} outside 0/1/2")
        grades[item_id] = int(score)
    missing = [i for i in expected_ids if i not in grades]
    if missing:
        raise JudgeFormatError(f"unrated items: {missing}")
    return ScoreSheet(grades=grades)


# ----------------------------------------------------------------------
# Transcripts and transport


class TranscriptArchive:
    """Append-only JSONL archive of every prompt/response exchange."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.records: list[dict] = []

    def append(self, record: dict) -> None:
        self.records.append(record)
        if self.path:
            with open(self.path, "a") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")


class RateLimiter:
    def __init__(self, min_interval: float = 0.0):
        self.min_interval = min_interval
        self._last = 0.0

    def wait(self) -> None:
        if self.min_interval <= 0:
            return
        now = time.monotonic()
        delta = self._last + self.min_interval - now
        if delta > 0:
            time.sleep(delta)
        self._last = time.monotonic()


class HttpJudgeClient:
    """Generic chat-completion endpoint: one prompt in, one text out.

    Expects POST {prompt, temperature, top_p, max_tokens} and a JSON
    response bearing a top-level "text" field.
    """

    def __init__(self, url: str, rate_limiter: RateLimiter | None = None):
        self.url = url
        self.rate_limiter = rate_limiter or RateLimiter()

    def complete(self, prompt: str, config: JudgeConfig) -> str:
        import httpx

        self.rate_limiter.wait()
        try:
            response = httpx.post(
                self.url,
                json={
                    "prompt": prompt,
                    "temperature": config.temperature,
                    "top_p": config.top_p,
                    "max_tokens": config.max_tokens,
                },
                timeout=config.timeout,
            )
        except httpx.HTTPError as exc:
            raise JudgeTransportError(f"judge endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            raise JudgeTransportError(f"judge endpoint returned {response.status_code}")
        body = response.json()
        if "text" not in body:
            raise JudgeFormatError("judge endpoint response missing 'text'")
        return str(body["text"])


# ----------------------------------------------------------------------
# Protocol drivers


def balanced_ab_assignment(n_pairings: int, seed: int) -> list[bool]:
    """True where the focal system takes position A; balanced to within one."""
    if n_pairings < 0:
        raise InvalidInputError("pairing count must be >= 0")
    half = n_pairings // 2
    flags = [True] * (n_pairings - half) + [False] * half
    Random(seed).shuffle(flags)
    return flags


def _call_with_retry(
    client: ChatClient,
    prompt: str,
    config: JudgeConfig,
    parse: Callable[[str], object],
    archive: TranscriptArchive | None,
    context: dict,
) -> object:
    attempt_prompt = prompt
    last_error: JudgeFormatError | None = None
    for attempt in range(config.retries + 1):
        response = client.complete(attempt_prompt, config)
        record = dict(context)
        record.update(
            {
                "judge_id": config.judge_id,
                "attempt": attempt,
                "prompt": attempt_prompt,
                "response": response,
            }
        )
        try:
            result = parse(response)
            record["outcome"] = "ok"
            if archive:
                archive.append(record)
            return result
        except JudgeFormatError as exc:
            last_error = exc
            record["outcome"] = f"format_error: {exc}"
            if archive:
                archive.append(record)
            attempt_prompt = prompt + _RETRY_REMINDER
    raise last_error or JudgeFormatError("judge returned no parseable output")


def run_arena(
    query_text: str,
    results_a: Sequence[JudgeItem],
    results_b: Sequence[JudgeItem],
    config: JudgeConfig,
    client: ChatClient,
    position_map: dict[str, str] | None = None,
    deny_list: Iterable[str] = (),
    archive: TranscriptArchive | None = None,
) -> ArenaVerdict:
    if not results_a or not results_b:
        raise InvalidInputError("arena requires results from both systems")
    prompt = render_arena_prompt(query_text, results_a, results_b)
    assert_anonymized(prompt, deny_list)
    verdict = _call_with_retry(
        client,
        prompt,
        config,
        lambda text: parse_arena_verdict(text, dict(position_map or {})),
        archive,
        {"protocol": "arena", "query": query_text},
    )
    return verdict  # type: ignore[return-value]


def run_scoring(
    query_text: str,
    results: Sequence[JudgeItem],
    config: JudgeConfig,
    client: ChatClient,
    allowed_types: Iterable[str] | None = None,
    deny_list: Iterable[str] = (),
    archive: TranscriptArchive | None = None,
) -> tuple[ScoreSheet, dict[str, str]]:
    """Scores one system's ranked results; returns sheet + id mapping."""
    if not results:
        raise InvalidInputError("nothing to score")
    prompt, mapping = render_scoring_prompt(query_text, results, allowed_types)
    assert_anonymized(prompt, deny_list)
    sheet = _call_with_retry(
        client,
        prompt,
        config,
        lambda text: parse_score_sheet(text, list(mapping)),
        archive,
        {"protocol": "scoring", "query": query_text},
    )
    return sheet, mapping  # type: ignore[return-value]


def tally_arena(verdicts: Iterable[ArenaVerdict], focal_system: str) -> tuple[int, int, int]:
    """(wins, losses, ties) for the focal system after de-mapping."""
    wins = losses = ties = 0
    for verdict in verdicts:
        winner = verdict.winning_system()
        if winner is None:
            ties += 1
        elif winner == focal_system:
            wins += 1
        else:
            losses += 1
    return wins, losses, ties


def judge_pool(
    pool: Pool,
    query_texts: Mapping[str, str],
    item_provider: Callable[[str, str], JudgeItem],
    judges: Sequence[JudgeConfig],
    client: ChatClient,
    batch_size: int = 3,
    deny_list: Iterable[str] = (),
    archive: TranscriptArchive | None = None,
    max_workers: int = 1,
) -> JudgmentSet:
    """Grade every pooled representative with every judge.

    Items go to the judge in batches of at most batch_size, mirroring a
    single system's top-k presentation. Batches that stay malformed
    after the retry are excluded and recorded as coverage gaps.
    """
    calls: list[tuple[str, JudgeConfig, list[str]]] = []
    for qid in sorted(pool.per_query):
        docs = pool.per_query[qid]
        for judge in judges:
            for i in range(0, len(docs), batch_size):
                calls.append((qid, judge, docs[i : i + batch_size]))

    def one(call: tuple[str, JudgeConfig, list[str]]):
        qid, judge, docs = call
        items = [item_provider(qid, doc_id) for doc_id in docs]
        try:
            sheet, mapping = run_scoring(
                query_texts[qid],
                items,
                judge,
                client,
                deny_list=deny_list,
                archive=archive,
            )
        except JudgeFormatError:
            return qid, judge.judge_id, None, docs
        return qid, judge.judge_id, sheet.by_doc(mapping), docs

    if max_workers > 1 and archive is None:
        with ThreadPoolExecutor(max_workers=max_workers) as pool_exec:
            outcomes = list(pool_exec.map(one, calls))
    else:
        # archives are append-only files; keep writes single-threaded
        outcomes = [one(call) for call in calls]

    judgments = JudgmentSet()
    for qid, judge_id, grades, docs in outcomes:
        if grades is None:
            judgments.coverage_notes.append(
                f"{qid}: batch {docs} excluded for judge {judge_id}"
            )
            continue
        for doc_id, grade in sorted(grades.items()):
            judgments.add(qid, doc_id, judge_id, grade)
    return judgments


def arena_campaign(
    run_a: RunFile,
    run_b: RunFile,
    query_texts: Mapping[str, str],
    item_provider: Callable[[str, str], JudgeItem],
    config: JudgeConfig,
    client: ChatClient,
    seed: int = 0,
    deny_list: Iterable[str] = (),
    archive: TranscriptArchive | None = None,
) -> list[ArenaVerdict]:
    """Arena over the shared query set with balanced A/B positions."""
    qids = sorted(set(run_a.results) & set(run_b.results))
    qids = [q for q in qids if run_a.results[q] and run_b.results[q]]
    flags = balanced_ab_assignment(len(qids), seed)
    verdicts = []
    for qid, a_first in zip(qids, flags):
        items_a = [item_provider(qid, d) for d in run_a.results[qid]]
        items_b = [item_provider(qid, d) for d in run_b.results[qid]]
        if a_first:
            shown_a, shown_b = items_a, items_b
            position_map = {"A": run_a.system_id, "B": run_b.system_id}
        else:
            shown_a, shown_b = items_b, items_a
            position_map = {"A": run_b.system_id, "B": run_a.system_id}
        try:
            verdicts.append(
                run_arena(
                    query_texts[qid],
                    shown_a,
                    shown_b,
                    config,
                    client,
                    position_map=position_map,
                    deny_list=deny_list,
                    archive=archive,
                )
            )
        except JudgeFormatError:
            continue  # pairing excluded, visible in the archive
    return verdicts


# ----------------------------------------------------------------------
# Offline stub judge


class StubJudgeClient:
    """Deterministic rule-based judge for offline runs.

    Grades by normalized-token overlap between the query and each
    item's snippet: full containment of the query's identifier-bearing
    tokens scores 2, any overlap scores 1, none scores 0. The arena
    winner is the side with the higher total grade.
    """

    def __init__(self, strong_overlap: float = 0.6):
        self.strong_overlap = strong_overlap

    def _grade(self, query_tokens: set[str], snippet: str) -> int:
        if not query_tokens:
            return 0
        item_tokens = set(tokenize(snippet))
        overlap = len(query_tokens & item_tokens) / len(query_tokens)
        if overlap >= self.strong_overlap:
            return 2
        if overlap > 0:
            return 1
        return 0

    def complete(self, prompt: str, config: JudgeConfig) -> str:
        query = ""
        for line in prompt.splitlines():
            if line.startswith("Query: "):
                query = line[len("Query: ") :]
                break
        query_tokens = set(tokenize(query))

        if "item_id=" in prompt:
            ratings = []
            for line in prompt.splitlines():
                if not line.startswith("rank="):
                    continue
                item_id = line.split("item_id=")[1].split()[0]
                snippet = line.split("snippet: ", 1)[1] if "snippet: " in line else ""
                ratings.append(
                    {"item_id": item_id, "score": self._grade(query_tokens, snippet)}
                )
            return json.dumps({"ratings": ratings}, sort_keys=True)

        totals = {"A": 0, "B": 0}
        side = None
        for line in prompt.splitlines():
            if line.startswith("System A results:"):
                side = "A"
            elif line.startswith("System B results:"):
                side = "B"
            elif side and line[:1].isdigit() and "snippet: " in line:
                totals[side] += self._grade(query_tokens, line.split("snippet: ", 1)[1])
        if totals["A"] > totals["B"]:
            winner = "A"
        elif totals["B"] > totals["A"]:
            winner = "B"
        else:
            winner = "tie"
        return json.dumps(
            {"winner": winner, "explanation": "token-overlap stub judgment"},
            sort_keys=True,
        )
