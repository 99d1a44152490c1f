"""Graded retrieval metrics and the statistics used to report them.

Grades are 0 (irrelevant), 1 (partially relevant), 2 (relevant).
The ideal ranking for nDCG comes from the pooled judged grades of the
same query, so a system can reach 1.0 only by surfacing the best of
what the pool contains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UndefinedRateError

GRADES = (0, 1, 2)

MAP_GE1 = "ge1"
MAP_EQ2 = "eq2"


def _check_grades(grades, where: str) -> list[int]:
    out = []
    for g in grades:
        if g not in GRADES:
            raise InvalidInputError(f"{where}: grade {g!r} not in {GRADES}")
        out.append(int(g))
    return out


def _padded(grades: list[int], k: int) -> list[int]:
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    return (grades + [0] * k)[:k]


def dcg(grades, k: int) -> float:
    ranked = _padded(_check_grades(grades, "dcg"), k)
    return sum(g / math.log2(i + 2) for i, g in enumerate(ranked))


def ndcg_at_k(grades, k: int, pool_grades) -> float:
    """nDCG@k with the ideal ranking drawn from the query's judged pool.

    A pool with no relevant items yields 0 by convention.
    """
    ideal = sorted(_check_grades(pool_grades, "ndcg pool"), reverse=True)
    idcg = dcg(ideal, k)
    if idcg == 0.0:
        return 0.0
    return dcg(grades, k) / idcg


def is_relevant(grade: int, mode: str) -> bool:
    if mode == MAP_GE1:
        return grade >= 1
    if mode == MAP_EQ2:
        return grade == 2
    raise InvalidInputError(f"unknown relevance mode {mode!r}")


def map_at_k(grades, k: int, mode: str, r_q: int) -> float:
    """Average precision at k under the given relevance predicate.

    r_q counts pool items meeting the predicate; zero means no
    qualifying item exists and the score is 0.
    """
    if r_q < 0:
        raise InvalidInputError("r_q must be >= 0")
    if r_q == 0:
        return 0.0
    ranked = _padded(_check_grades(grades, "map"), k)
    hits = 0
    total = 0.0
    for i, g in enumerate(ranked, start=1):
        if is_relevant(g, mode):
            hits += 1
            total += hits / i
    return total / r_q


def prf_success(grades, k: int, r_q: int) -> tuple[float, float, float]:
    """(P@k, R@k, Succ@k) counting any grade above zero as relevant."""
    if r_q < 0:
        raise InvalidInputError("r_q must be >= 0")
    ranked = _padded(_check_grades(grades, "prf"), k)
    found = sum(1 for g in ranked if g > 0)
    precision = found / k
    recall = found / r_q if r_q > 0 else 0.0
    success = 1.0 if any(g >= 1 for g in ranked) else 0.0
    return precision, recall, success


@dataclass(frozen=True)
class BootstrapConfig:
    resamples: int = 10_000
    seed: int = 0
    confidence: float = 0.95

    def __post_init__(self) -> None:
        if self.resamples < 1:
            raise InvalidInputError("resamples must be >= 1")
        if not 0 < self.confidence < 1:
            raise InvalidInputError("confidence must be in (0, 1)")


@dataclass(frozen=True)
class MeanCI:
    mean: float
    lo: float
    hi: float
    n: int

    def to_json(self) -> dict:
        return {"mean": self.mean, "lo": self.lo, "hi": self.hi, "n": self.n}


def aggregate(values, config: BootstrapConfig | None = None) -> MeanCI:
    """Mean with a seeded percentile-bootstrap confidence interval."""
    config = config or BootstrapConfig()
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise InvalidInputError("cannot aggregate an empty value list")
    rng = np.random.default_rng(config.seed)
    idx = rng.integers(0, arr.size, size=(config.resamples, arr.size))
    means = arr[idx].mean(axis=1)
    tail = 100.0 * (1.0 - config.confidence) / 2.0
    lo, hi = np.percentile(means, [tail, 100.0 - tail])
    return MeanCI(mean=float(arr.mean()), lo=float(lo), hi=float(hi), n=arr.size)


def paired_randomization_test(
    values_a, values_b, permutations: int = 10_000, seed: int = 0
) -> float:
    """Two-sided paired sign-flip test on per-query score differences.

    Enumerates all sign patterns when 2^n fits inside the permutation
    budget; otherwise samples with a seeded RNG using the add-one
    Monte Carlo estimate.
    """
    a = np.asarray(list(values_a), dtype=float)
    b = np.asarray(list(values_b), dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError("paired tests need equal-length value lists")
    if a.size == 0:
        raise InvalidInputError("paired tests need at least one pair")
    diffs = a - b
    observed = abs(diffs.sum())
    n = diffs.size
    # 1e-12 absorbs last-ulp asymmetry so mirrored sign patterns count
    # identically on both sides.
    threshold = observed - 1e-12

    if n <= 30 and (1 << n) <= permutations:
        hits = 0
        for mask in range(1 << n):
            signed = diffs.copy()
            for i in range(n):
                if mask >> i & 1:
                    signed[i] = -signed[i]
            if abs(signed.sum()) >= threshold:
                hits += 1
        return hits / (1 << n)

    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=(permutations, n))
    stats = np.abs((signs * diffs).sum(axis=1))
    hits = int(np.count_nonzero(stats >= threshold))
    return (1 + hits) / (permutations + 1)


def win_rate(wins: int, losses: int, ties: int) -> float:
    """Percentage of decisive comparisons won; ties sit outside the rate."""
    if min(wins, losses, ties) < 0:
        raise InvalidInputError("counts must be nonnegative")
    if wins + losses == 0:
        raise UndefinedRateError("no decisive comparisons to rate")
    return 100.0 * wins / (wins + losses)
