"""Inter-rater agreement statistics over the 0/1/2 grade scale."""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateAgreementError, InvalidInputError
from .metrics import GRADES

_K = len(GRADES)


def _check_pair(labels_a, labels_b, name: str) -> tuple[list[int], list[int]]:
    a = list(labels_a)
    b = list(labels_b)
    if len(a) != len(b):
        raise InvalidInputError(f"{name}: label lists differ in length")
    if not a:
        raise InvalidInputError(f"{name}: empty label lists")
    for g in a + b:
        if g not in GRADES:
            raise InvalidInputError(f"{name}: label {g!r} not in {GRADES}")
    return a, b


def cohen_kappa_quadratic(labels_a, labels_b) -> float:
    """Cohen's kappa with quadratic disagreement weights on a 3x3 table."""
    a, b = _check_pair(labels_a, labels_b, "cohen_kappa")
    n = len(a)
    observed = np.zeros((_K, _K))
    for x, y in zip(a, b):
        observed[x, y] += 1
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0)) / n
    weight = np.array(
        [[(i - j) ** 2 / (_K - 1) ** 2 for j in range(_K)] for i in range(_K)]
    )
    expected_disagreement = float((weight * expected).sum())
    if expected_disagreement == 0.0:
        raise DegenerateAgreementError("kappa undefined: a single category used")
    return 1.0 - float((weight * observed).sum()) / expected_disagreement


def fleiss_kappa(matrix) -> float:
    """Fleiss' kappa for a complete items-by-raters grade matrix."""
    rows = [list(row) for row in matrix]
    if not rows:
        raise InvalidInputError("fleiss_kappa: no items")
    raters = len(rows[0])
    if raters < 2:
        raise InvalidInputError("fleiss_kappa: need at least 2 raters")
    counts = np.zeros((len(rows), _K))
    for i, row in enumerate(rows):
        if len(row) != raters:
            raise InvalidInputError(f"fleiss_kappa: item {i} has {len(row)} ratings")
        for g in row:
            if g not in GRADES:
                raise InvalidInputError(f"fleiss_kappa: label {g!r} not in {GRADES}")
            counts[i, g] += 1
    n_items = len(rows)
    p_i = ((counts**2).sum(axis=1) - raters) / (raters * (raters - 1))
    p_bar = float(p_i.mean())
    p_j = counts.sum(axis=0) / (n_items * raters)
    p_e = float((p_j**2).sum())
    if p_e == 1.0:
        raise DegenerateAgreementError("kappa undefined: a single category used")
    return (p_bar - p_e) / (1.0 - p_e)


def kendall_tau(xs, ys) -> float:
    """Tie-corrected Kendall tau-b over paired numeric sequences."""
    x = list(xs)
    y = list(ys)
    if len(x) != len(y):
        raise InvalidInputError("kendall_tau: sequences differ in length")
    if len(x) < 2:
        raise InvalidInputError("kendall_tau: need at least 2 pairs")
    concordant = discordant = 0
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0 or dy == 0:
                continue
            if (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    n_pairs = n * (n - 1) // 2
    denom = math.sqrt((n_pairs - _tie_term(x)) * (n_pairs - _tie_term(y)))
    if denom == 0.0:
        raise DegenerateAgreementError("tau undefined: a constant sequence")
    return (concordant - discordant) / denom


def _tie_term(values) -> float:
    groups: dict = {}
    for v in values:
        groups[v] = groups.get(v, 0) + 1
    return sum(c * (c - 1) / 2 for c in groups.values())
