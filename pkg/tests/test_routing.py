import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from engsearch.errors import (
    DegenerateTrainingError,
    InvalidInputError,
)
from engsearch.kinds import Kind
from engsearch.routing import (
    ClassificationReport,
    FitConfig,
    RouterModel,
    RoutingFeatures,
    combine_heuristics,
    evaluate_router,
    fit_router,
    harmonic_f1,
    score_logit,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_combine_heuristics_is_mean():
    assert combine_heuristics(0.3, 0.6, 0.9) == pytest.approx(0.6)
    assert combine_heuristics(0, 0, 0) == 0.0


def test_combine_heuristics_rejects_out_of_range():
    with pytest.raises(InvalidInputError):
        combine_heuristics(1.2, 0.5, 0.5)
    with pytest.raises(InvalidInputError):
        combine_heuristics(0.5, -0.1, 0.5)


def test_features_validation():
    with pytest.raises(InvalidInputError):
        RoutingFeatures(p_draw=1.5, heuristic=0.5)
    with pytest.raises(InvalidInputError):
        RoutingFeatures(p_draw=0.5, heuristic=0.5, cad_prior=2)
    with pytest.raises(InvalidInputError):
        RoutingFeatures(p_draw=0.5, heuristic=0.9, sub_scores=(0.1, 0.1, 0.1))
    ok = RoutingFeatures(p_draw=0.5, heuristic=0.2, sub_scores=(0.1, 0.2, 0.3))
    assert ok.heuristic == pytest.approx(0.2)


def test_score_logit_formula():
    model = RouterModel(
        alpha=-1.0, beta_clip=2.0, beta_heur=-0.5, beta_cad=0.25, beta_int=1.0
    )
    f = RoutingFeatures(p_draw=0.8, heuristic=0.4, cad_prior=1)
    d = score_logit(f, model)
    expected = -1.0 + 2.0 * 0.8 - 0.5 * 0.4 + 0.25 + 1.0 * 0.8 * 0.4
    assert d.logit == pytest.approx(expected, abs=1e-12)
    assert d.probability == pytest.approx(1.0 / (1.0 + math.exp(-expected)))


def test_score_logit_tie_goes_to_drawing():
    model = RouterModel()  # zero coefficients: probability exactly 0.5
    d = score_logit(RoutingFeatures(p_draw=0.3, heuristic=0.7), model)
    assert d.probability == 0.5
    assert d.label is Kind.DRAWING


def test_score_logit_below_threshold_is_document():
    model = RouterModel(alpha=-0.1)
    d = score_logit(RoutingFeatures(p_draw=0.0, heuristic=0.0), model)
    assert d.label is Kind.DOCUMENT


@given(unit, unit, st.sampled_from([0, 1]))
def test_probability_always_in_unit_interval(p, h, cad):
    model = RouterModel(alpha=-3.0, beta_clip=5.91, beta_heur=-0.81, beta_int=2.21)
    d = score_logit(RoutingFeatures(p_draw=p, heuristic=h, cad_prior=cad), model)
    assert 0.0 < d.probability < 1.0
    assert (d.label is Kind.DRAWING) == (d.probability >= model.threshold)


def test_router_model_validation():
    with pytest.raises(InvalidInputError):
        RouterModel(threshold=0.0)
    with pytest.raises(InvalidInputError):
        RouterModel(alpha=float("nan"))


def test_router_model_json_round_trip():
    model = RouterModel(alpha=0.5, beta_clip=1.5, beta_heur=-2.0, threshold=0.4)
    again = RouterModel.from_json(model.to_json())
    assert again == model
    with pytest.raises(InvalidInputError):
        RouterModel.from_json('{"alpha": 1.0}')


def _separable_set(n=60):
    labeled = []
    for i in range(n):
        t = i / (n - 1)
        labeled.append(
            (RoutingFeatures(p_draw=0.8 + 0.2 * t, heuristic=0.9), Kind.DRAWING)
        )
        labeled.append(
            (RoutingFeatures(p_draw=0.2 * t, heuristic=0.1), Kind.DOCUMENT)
        )
    return labeled


def test_fit_router_separates_classes():
    labeled = _separable_set()
    model = fit_router(labeled, FitConfig(max_iter=2000))
    preds = [score_logit(f, model).label for f, _ in labeled]
    truth = [lab for _, lab in labeled]
    report = evaluate_router(preds, truth)
    assert report.accuracy == 1.0
    assert model.beta_clip > 0  # higher classifier scores push toward Drawing


def test_fit_router_single_class_degenerate():
    labeled = [
        (RoutingFeatures(p_draw=0.9, heuristic=0.9), Kind.DRAWING),
        (RoutingFeatures(p_draw=0.95, heuristic=0.8), Kind.DRAWING),
    ]
    with pytest.raises(DegenerateTrainingError):
        fit_router(labeled)


def test_fit_router_empty_rejected():
    with pytest.raises(InvalidInputError):
        fit_router([])


def test_harmonic_f1():
    assert harmonic_f1(0.0, 0.0) == 0.0
    assert harmonic_f1(0.5, 0.5) == pytest.approx(0.5)
    assert harmonic_f1(0.919, 0.977) == pytest.approx(0.947, abs=1e-3)


def test_evaluate_router_hand_confusion():
    D, C = Kind.DRAWING, Kind.DOCUMENT
    truth = [D] * 4 + [C] * 6
    preds = [D, D, D, C] + [D, C, C, C, C, C]
    report = evaluate_router(preds, truth)
    drawing = report.per_class[D]
    assert drawing.precision == pytest.approx(3 / 4)
    assert drawing.recall == pytest.approx(3 / 4)
    assert drawing.f1 == pytest.approx(3 / 4)
    document = report.per_class[C]
    assert document.precision == pytest.approx(5 / 6)
    assert document.recall == pytest.approx(5 / 6)
    assert report.accuracy == pytest.approx(8 / 10)
    assert report.macro.f1 == pytest.approx((3 / 4 + 5 / 6) / 2)
    assert report.confusion[D][C] == 1
    assert report.confusion[C][D] == 1


def test_evaluate_router_input_checks():
    with pytest.raises(InvalidInputError):
        evaluate_router([Kind.DRAWING], [])
    with pytest.raises(InvalidInputError):
        evaluate_router([], [])
