"""Drawing-vs-document routing.

Each incoming file is summarized by three signals: the probability an
external image classifier assigns to "engineering drawing", a structural
heuristic score built from border/edge/line cues, and a binary prior from
CAD-style file extensions.  A calibrated logistic model combines them;
files at or above the decision threshold take the drawing pipeline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateTrainingError, InvalidInputError
from .kinds import Kind


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise InvalidInputError(f"{name} must be in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class RoutingFeatures:
    """Per-file routing signals.

    ``sub_scores`` optionally carries the raw (border, edge_density,
    line_score) triple; when present, ``heuristic`` must equal their
    combination (see :func:`combine_heuristics`).
    """

    p_draw: float
    heuristic: float
    cad_prior: int = 0
    sub_scores: tuple[float, float, float] | None = None

    def __post_init__(self):
        _check_unit("p_draw", self.p_draw)
        _check_unit("heuristic", self.heuristic)
        if self.cad_prior not in (0, 1):
            raise InvalidInputError(f"cad_prior must be 0 or 1, got {self.cad_prior!r}")
        if self.sub_scores is not None:
            combined = combine_heuristics(*self.sub_scores)
            if abs(combined - self.heuristic) > 1e-9:
                raise InvalidInputError(
                    "heuristic does not match combine_heuristics(sub_scores): "
                    f"{self.heuristic} vs {combined}"
                )


def combine_heuristics(border: float, edge_density: float, line_score: float) -> float:
    """Fold the three structural cues into one heuristic score.

    Arithmetic mean: bounded, parameter-free, and monotone nondecreasing
    in each cue.
    """
    b = _check_unit("border", border)
    e = _check_unit("edge_density", edge_density)
    l = _check_unit("line_score", line_score)
    return (b + e + l) / 3.0


@dataclass
class RouterModel:
    """Logistic router: intercept, four coefficients, and a threshold."""

    alpha: float = 0.0
    beta_clip: float = 0.0
    beta_heur: float = 0.0
    beta_cad: float = 0.0
    beta_int: float = 0.0
    threshold: float = 0.5

    def __post_init__(self):
        for name in ("alpha", "beta_clip", "beta_heur", "beta_cad", "beta_int"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"coefficient {name} must be finite")
        if not 0.0 < self.threshold < 1.0:
            raise InvalidInputError(f"threshold must be in (0, 1), got {self.threshold}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "alpha": self.alpha,
                "beta_clip": self.beta_clip,
                "beta_heur": self.beta_heur,
                "beta_cad": self.beta_cad,
                "beta_int": self.beta_int,
                "threshold": self.threshold,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "RouterModel":
        raw = json.loads(text)
        try:
            return cls(
                alpha=float(raw["alpha"]),
                beta_clip=float(raw["beta_clip"]),
                beta_heur=float(raw["beta_heur"]),
                beta_cad=float(raw["beta_cad"]),
                beta_int=float(raw["beta_int"]),
                threshold=float(raw["threshold"]),
            )
        except KeyError as exc:
            raise InvalidInputError(f"router model JSON missing {exc}") from exc


@dataclass(frozen=True)
class RoutingDecision:
    label: Kind
    probability: float
    logit: float


def _sigmoid(x: float) -> float:
    # Split to avoid overflow in exp for large |x|.
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def score_logit(features: RoutingFeatures, model: RouterModel) -> RoutingDecision:
    """Score one file.

    logit = alpha + beta_clip*p + beta_heur*h + beta_cad*c + beta_int*(p*h);
    probability is the sigmoid of the logit.  Ties at the threshold route
    to Drawing (the tuned operating point favors drawing recall).
    """
    p, h, c = features.p_draw, features.heuristic, features.cad_prior
    logit = (
        model.alpha
        + model.beta_clip * p
        + model.beta_heur * h
        + model.beta_cad * c
        + model.beta_int * (p * h)
    )
    if not math.isfinite(logit):
        raise InvalidInputError("non-finite logit; check features and coefficients")
    prob = _sigmoid(logit)
    label = Kind.DRAWING if prob >= model.threshold else Kind.DOCUMENT
    return RoutingDecision(label=label, probability=prob, logit=logit)


@dataclass(frozen=True)
class FitConfig:
    """Settings for :func:`fit_router`.

    Full-batch gradient descent with backtracking line search on the
    L2-regularized negative log-likelihood; deterministic for a fixed
    config (the seed only matters if an initial point is randomized,
    which the default zero start is not).
    """

    l2: float = 1e-4
    max_iter: int = 10_000
    grad_tol: float = 1e-8
    seed: int = 0
    threshold: float = 0.5


def _design_matrix(features: Sequence[RoutingFeatures]) -> np.ndarray:
    rows = [
        (1.0, f.p_draw, f.heuristic, float(f.cad_prior), f.p_draw * f.heuristic)
        for f in features
    ]
    return np.asarray(rows, dtype=np.float64)


def _nll_grad(w: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float):
    z = X @ w
    # log(1 + exp(z)) computed stably
    log1pexp = np.where(z > 30, z, np.log1p(np.exp(np.minimum(z, 30))))
    nll = float(np.sum(log1pexp - y * z))
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -700, 700)))
    grad = X.T @ (p - y)
    # Intercept is not regularized.
    reg = l2 * np.concatenate(([0.0], w[1:]))
    return nll + 0.5 * l2 * float(np.dot(w[1:], w[1:])), grad + reg


def fit_router(
    labeled: Sequence[tuple[RoutingFeatures, Kind]],
    config: FitConfig = FitConfig(),
) -> RouterModel:
    """Fit the logistic router on labeled files.

    Raises :class:`DegenerateTrainingError` unless both labels appear.
    """
    if not labeled:
        raise InvalidInputError("empty training set")
    feats = [f for f, _ in labeled]
    y = np.asarray([1.0 if lab == Kind.DRAWING else 0.0 for _, lab in labeled])
    if y.min() == y.max():
        raise DegenerateTrainingError("training set contains a single class")

    X = _design_matrix(feats)
    w = np.zeros(5)
    step = 1.0
    value, grad = _nll_grad(w, X, y, config.l2)
    for _ in range(config.max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < config.grad_tol:
            break
        # Backtracking line search (Armijo).
        accepted = False
        while step > 1e-18:
            trial = w - step * grad
            trial_value, trial_grad = _nll_grad(trial, X, y, config.l2)
            if trial_value <= value - 1e-4 * step * gnorm * gnorm:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        w, value, grad = trial, trial_value, trial_grad
        step = min(step * 2.0, 1e6)
    return RouterModel(
        alpha=float(w[0]),
        beta_clip=float(w[1]),
        beta_heur=float(w[2]),
        beta_cad=float(w[3]),
        beta_int=float(w[4]),
        threshold=config.threshold,
    )


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ClassificationReport:
    """Binary drawing/document report with per-class and macro rows.

    ``confusion`` is keyed [truth][prediction] over (Drawing, Document).
    """

    per_class: dict[Kind, ClassMetrics]
    accuracy: float
    macro: ClassMetrics
    confusion: dict[Kind, dict[Kind, int]] = field(repr=False)


def harmonic_f1(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def evaluate_router(
    predictions: Sequence[Kind], truth: Sequence[Kind]
) -> ClassificationReport:
    if len(predictions) != len(truth):
        raise InvalidInputError(
            f"length mismatch: {len(predictions)} predictions vs {len(truth)} truths"
        )
    if not predictions:
        raise InvalidInputError("empty evaluation set")

    classes = (Kind.DRAWING, Kind.DOCUMENT)
    confusion = {t: {p: 0 for p in classes} for t in classes}
    for pred, true in zip(predictions, truth):
        confusion[true][pred] += 1

    per_class = {}
    for k in classes:
        tp = confusion[k][k]
        fp = sum(confusion[other][k] for other in classes if other != k)
        fn = sum(confusion[k][other] for other in classes if other != k)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        per_class[k] = ClassMetrics(precision, recall, harmonic_f1(precision, recall))

    total = len(predictions)
    correct = sum(confusion[k][k] for k in classes)
    macro = ClassMetrics(
        precision=sum(m.precision for m in per_class.values()) / 2.0,
        recall=sum(m.recall for m in per_class.values()) / 2.0,
        f1=sum(m.f1 for m in per_class.values()) / 2.0,
    )
    return ClassificationReport(
        per_class=per_class,
        accuracy=correct / total,
        macro=macro,
        confusion=confusion,
    )
