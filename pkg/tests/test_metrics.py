import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from engsearch.errors import InvalidInputError, UndefinedRateError
from engsearch.metrics import (
    MAP_EQ2,
    MAP_GE1,
    BootstrapConfig,
    aggregate,
    dcg,
    is_relevant,
    map_at_k,
    ndcg_at_k,
    paired_randomization_test,
    prf_success,
    win_rate,
)

from oracles import (
    ap_ref,
    ndcg_ref,
    precision_ref,
    recall_ref,
    sign_flip_ref,
    success_ref,
)

grades_lists = st.lists(st.sampled_from([0, 1, 2]), min_size=0, max_size=8)


def test_dcg_discounts_by_rank():
    # 2/log2(2) + 0 + 1/log2(4)
    assert dcg([2, 0, 1], 3) == pytest.approx(2.5, abs=1e-12)


def test_dcg_pads_and_truncates():
    assert dcg([2], 3) == dcg([2, 0, 0], 3)
    assert dcg([2, 1, 1, 2], 2) == dcg([2, 1], 2)


def test_ndcg_known_value():
    assert ndcg_at_k([2, 0, 1], 3, [2, 1, 1, 0]) == pytest.approx(
        0.7984848580994974, abs=1e-12
    )


def test_ndcg_perfect_ranking_is_one():
    assert ndcg_at_k([2, 1, 0], 3, [2, 1, 0]) == 1.0


def test_ndcg_empty_pool_is_zero():
    assert ndcg_at_k([0, 0, 0], 3, [0, 0]) == 0.0
    assert ndcg_at_k([], 3, []) == 0.0


def test_ndcg_rejects_bad_grades():
    with pytest.raises(InvalidInputError):
        ndcg_at_k([3], 3, [2])
    with pytest.raises(InvalidInputError):
        ndcg_at_k([1], 0, [2])


def test_map_known_values():
    assert map_at_k([1, 0, 2], 3, MAP_GE1, 3) == pytest.approx(
        0.5555555555555555, abs=1e-12
    )
    assert map_at_k([1, 0, 2], 3, MAP_EQ2, 1) == pytest.approx(
        0.3333333333333333, abs=1e-12
    )


def test_map_zero_pool_relevant():
    assert map_at_k([1, 2], 3, MAP_GE1, 0) == 0.0
    with pytest.raises(InvalidInputError):
        map_at_k([1], 3, MAP_GE1, -1)
    with pytest.raises(InvalidInputError):
        map_at_k([1], 3, "all", 1)


def test_is_relevant_modes():
    assert is_relevant(1, MAP_GE1) and is_relevant(2, MAP_GE1)
    assert not is_relevant(0, MAP_GE1)
    assert is_relevant(2, MAP_EQ2)
    assert not is_relevant(1, MAP_EQ2)


def test_prf_success_known_values():
    p, r, s = prf_success([2, 0, 1], 3, 4)
    assert p == pytest.approx(2 / 3)
    assert r == pytest.approx(0.5)
    assert s == 1.0
    assert prf_success([0, 0], 2, 2) == (0.0, 0.0, 0.0)


@given(grades_lists, st.sampled_from([1, 3, 5]), grades_lists)
def test_ndcg_matches_oracle(grades, k, extra_pool):
    pool = grades + extra_pool  # ranked grades always inside the pool
    assert ndcg_at_k(grades, k, pool) == pytest.approx(
        ndcg_ref(grades, k, pool), abs=1e-12
    )


@given(grades_lists, st.sampled_from([1, 3, 5]), st.integers(0, 10))
def test_map_matches_oracle(grades, k, r_q):
    got = map_at_k(grades, k, MAP_GE1, r_q)
    assert got == pytest.approx(ap_ref(grades, k, lambda g: g >= 1, r_q), abs=1e-12)
    got2 = map_at_k(grades, k, MAP_EQ2, r_q)
    assert got2 == pytest.approx(ap_ref(grades, k, lambda g: g == 2, r_q), abs=1e-12)


@given(grades_lists, st.sampled_from([1, 3, 5]), st.integers(1, 10))
def test_prf_matches_oracle(grades, k, r_q):
    p, r, s = prf_success(grades, k, r_q)
    assert p == pytest.approx(precision_ref(grades, k), abs=1e-12)
    assert r == pytest.approx(recall_ref(grades, k, r_q), abs=1e-12)
    assert s == success_ref(grades, k)


@given(grades_lists, grades_lists, st.sampled_from([1, 3, 5]))
def test_ndcg_bounded_by_one_when_pool_covers_ranking(grades, extra, k):
    pool = grades + extra
    score = ndcg_at_k(grades, k, pool)
    assert 0.0 <= score <= 1.0 + 1e-12


def test_aggregate_constant_values():
    ci = aggregate([0.5, 0.5, 0.5, 0.5])
    assert ci.mean == ci.lo == ci.hi == 0.5
    assert ci.n == 4


def test_aggregate_is_seeded():
    values = [0.1, 0.9, 0.4, 0.6, 0.2]
    a = aggregate(values, BootstrapConfig(resamples=2000, seed=7))
    b = aggregate(values, BootstrapConfig(resamples=2000, seed=7))
    assert (a.lo, a.hi) == (b.lo, b.hi)
    c = aggregate(values, BootstrapConfig(resamples=2000, seed=8))
    assert (a.lo, a.hi) != (c.lo, c.hi)


def test_aggregate_interval_brackets_mean():
    values = [0.1, 0.9, 0.4, 0.6, 0.2]
    ci = aggregate(values)
    assert ci.lo <= ci.mean <= ci.hi


def test_aggregate_empty_rejected():
    with pytest.raises(InvalidInputError):
        aggregate([])


def test_bootstrap_config_validation():
    with pytest.raises(InvalidInputError):
        BootstrapConfig(resamples=0)
    with pytest.raises(InvalidInputError):
        BootstrapConfig(confidence=1.0)


def test_paired_randomization_exhaustive_known():
    a = [0.6, 0.7, 0.65]
    b = [0.5, 0.5, 0.5]
    # all diffs positive: only the all-plus and all-minus patterns tie it
    assert paired_randomization_test(a, b) == pytest.approx(0.25)


def test_paired_randomization_zero_diffs_give_one():
    assert paired_randomization_test([0.5, 0.1], [0.5, 0.1]) == 1.0


@given(
    st.lists(st.integers(-5, 5), min_size=1, max_size=8).map(
        lambda xs: [float(x) for x in xs]
    )
)
def test_paired_randomization_matches_exhaustive_oracle(diffs):
    zeros = [0.0] * len(diffs)
    assert paired_randomization_test(diffs, zeros) == pytest.approx(
        sign_flip_ref(diffs), abs=1e-12
    )


def test_paired_randomization_monte_carlo_path():
    rng = np.random.default_rng(3)
    a = rng.normal(0.6, 0.1, size=40)
    b = rng.normal(0.5, 0.1, size=40)
    p1 = paired_randomization_test(a, b, permutations=2000, seed=11)
    p2 = paired_randomization_test(a, b, permutations=2000, seed=11)
    assert p1 == p2
    assert 0.0 < p1 <= 1.0
    # add-one estimate can never return exactly zero
    assert p1 >= 1.0 / 2001


def test_paired_randomization_input_checks():
    with pytest.raises(InvalidInputError):
        paired_randomization_test([1.0], [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        paired_randomization_test([], [])


def test_win_rate_basic():
    assert win_rate(1, 1, 0) == 50.0
    assert win_rate(3, 1, 96) == 75.0  # ties excluded from the denominator


def test_win_rate_errors():
    with pytest.raises(UndefinedRateError):
        win_rate(0, 0, 5)
    with pytest.raises(InvalidInputError):
        win_rate(-1, 2, 0)
