import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ftlab.concat import (
    AboveThresholdError, ConcatParams, badness_bound, concatenated_repetition_failure,
    exact_badness, failure_prob_bound, loglog_slope, majority_decode, repetition_failure,
    required_level, simulate_badness, threshold_sweep,
)


def _enumerated_failure(p, bits):
    # probability that majority decoding of `bits`-bit recursive repetition fails
    total = 0.0
    for flips in itertools.product((0, 1), repeat=bits):
        w = sum(flips)
        prob = p**w * (1 - p) ** (bits - w)
        v = list(flips)
        while len(v) > 1:
            v = [int(sum(v[i:i + 3]) >= 2) for i in range(0, len(v), 3)]
        total += prob * v[0]
    return total


def test_majority_decode():
    assert majority_decode("000") == 0
    assert majority_decode([1, 0, 1]) == 1
    assert majority_decode([0, 0, 1]) == 0
    with pytest.raises(ValueError):
        majority_decode([1, 0])


def test_repetition_failure_values():
    assert repetition_failure(0) == 0
    assert repetition_failure(1) == 1
    assert repetition_failure(0.1) == pytest.approx(_enumerated_failure(0.1, 3), abs=1e-15)
    assert repetition_failure(0.1) == pytest.approx(0.028, abs=1e-15)
    assert concatenated_repetition_failure(0.1, 1) == repetition_failure(0.1)
    assert concatenated_repetition_failure(0.1, 2) == pytest.approx(_enumerated_failure(0.1, 9), abs=1e-15)
    assert concatenated_repetition_failure(0.1, 2) == pytest.approx(2.33e-3, rel=1e-2)
    with pytest.raises(ValueError):
        repetition_failure(1.5)


@given(st.floats(1e-6, 1 / 3 - 1e-6))
def test_below_one_third_improves(p):
    assert repetition_failure(p) < p
    vals = [concatenated_repetition_failure(p, k) for k in range(1, 5)]
    assert all(b < a for a, b in zip(vals, vals[1:]) if a > 0)


def test_params_validation():
    assert ConcatParams(None, 0.1, m=4).A == 6
    with pytest.raises(ValueError):
        ConcatParams(5, 0.1, m=4)
    with pytest.raises(ValueError):
        ConcatParams(3, 1.2)
    with pytest.raises(ValueError):
        ConcatParams(3, 0.1, delta=0)


def test_badness_bound_examples():
    assert badness_bound(ConcatParams(10, 0.01, k=1)) == pytest.approx(10 * 0.01**2)
    assert badness_bound(ConcatParams(10, 0.01, k=2)) == pytest.approx(1e-5)
    for k in range(1, 8):
        assert badness_bound(ConcatParams(7, 1 / 7, k=k)) == pytest.approx(1 / 7)
    assert badness_bound(ConcatParams(3, 0.9, k=12)) == 1.0


@given(st.integers(2, 60), st.floats(1e-6, 1.0), st.integers(1, 6))
def test_loglog_affine_with_slope_log2(A, frac, k):
    eps = frac * 0.999 / A
    vals = [badness_bound(ConcatParams(A, eps, k=j)) for j in (k, k + 1)]
    if min(vals) <= 0 or min(vals) < 1e-300:
        return
    y = [math.log(math.log(A * v) / math.log(A * eps)) for v in vals]
    assert y[1] - y[0] == pytest.approx(math.log(2), rel=1e-6)


def _enumerated_badness(m, eps, k):
    # exhaustive over all fault patterns of the m^k locations
    total = 0.0
    n = m**k
    for pattern in itertools.product((0, 1), repeat=n):
        w = sum(pattern)
        v = np.array(pattern)
        for _ in range(k):
            v = v.reshape(-1, m).sum(axis=1) >= 2
        total += eps**w * (1 - eps) ** (n - w) * bool(v[0])
    return total


@pytest.mark.parametrize("m,k", [(2, 1), (3, 1), (2, 2), (3, 2), (2, 3)])
def test_exact_badness_against_enumeration(m, k):
    for eps in (0.05, 0.3):
        assert exact_badness(m, eps, k) == pytest.approx(_enumerated_badness(m, eps, k), rel=1e-12)


def test_simulate_small_cases():
    est = simulate_badness(2, 0.5, 1, 40_000, seed=1)
    assert abs(est.estimate - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / 40_000)
    est = simulate_badness(3, 0.1, 1, 200_000, seed=2)
    assert abs(est.estimate - 0.028) <= 3 * math.sqrt(0.028 * 0.972 / 200_000)


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_simulation_matches_recursion(m, k):
    eps = 0.2
    exact = exact_badness(m, eps, k)
    sigma = math.sqrt(exact * (1 - exact) / 20_000)
    for seed in range(10):
        est = simulate_badness(m, eps, k, 20_000, seed=seed)
        assert abs(est.estimate - exact) <= 3 * sigma + 1e-12


def test_simulation_deterministic_and_worker_independent():
    a = simulate_badness(4, 0.1, 2, 100_000, seed=9)
    b = simulate_badness(4, 0.1, 2, 100_000, seed=9, workers=4)
    c = simulate_badness(4, 0.1, 2, 100_000, seed=10)
    assert a == b
    assert a.bad != c.bad


def test_closed_form_bound_holds_on_grid():
    rows = threshold_sweep([3, 4], [0.01, 0.1], 3, 50_000, seed=3)
    for r in rows:
        assert r["mc_estimate"] <= r["closed_form_bound"] + 3 * r["std_err"]


def test_loglog_slope_recovers_log2():
    A, eps = 6, 0.05
    probs = {k: badness_bound(ConcatParams(A, eps, k=k)) for k in (1, 2, 3)}
    assert loglog_slope(A, probs) == pytest.approx(math.log(2), rel=1e-9)
    with pytest.raises(ValueError):
        loglog_slope(A, {1: probs[1]})


def _direct_min_level(A, eps, L, delta):
    if delta >= 2:
        return 0
    k = 0
    while 2 * L * (A * eps) ** (2**k) / A > delta:
        k += 1
    return k


def test_required_level_examples():
    assert required_level(ConcatParams(10**4, 1e-5, L=10**6, delta=1e-6)) == 4
    assert _direct_min_level(10**4, 1e-5, 10**6, 1e-6) == 4
    assert required_level(ConcatParams(10, 0.01, L=10, delta=2.0)) == 0
    with pytest.raises(AboveThresholdError):
        required_level(ConcatParams(10, 0.1))
    with pytest.raises(AboveThresholdError):
        required_level(ConcatParams(10, 0.2))


@given(st.integers(2, 1000), st.floats(0.01, 0.99), st.integers(1, 10**9),
       st.floats(1e-12, 1.9))
def test_required_level_is_minimal(A, frac, L, delta):
    eps = frac / A
    k = required_level(ConcatParams(A, eps, L=L, delta=delta))
    assert k == _direct_min_level(A, eps, L, delta)


@given(st.floats(1e-10, 1.9), st.floats(1e-10, 1.9), st.integers(1, 10**6), st.integers(1, 10**6))
def test_required_level_monotone(d1, d2, L1, L2):
    lo, hi = sorted((d1, d2))
    La, Lb = sorted((L1, L2))
    p = dict(A=6, eps=0.01)
    assert required_level(ConcatParams(**p, L=La, delta=hi)) <= required_level(ConcatParams(**p, L=La, delta=lo))
    assert required_level(ConcatParams(**p, L=La, delta=lo)) <= required_level(ConcatParams(**p, L=Lb, delta=lo))


def test_failure_prob_bound():
    f = failure_prob_bound(ConcatParams(10, 0.01, L=100, k=2))
    assert f.p_fail == pytest.approx(1e-3)
    assert f.delta == pytest.approx(2e-3)
    one = failure_prob_bound(ConcatParams(10, 0.01, L=1, k=2))
    assert one.p_fail == badness_bound(ConcatParams(10, 0.01, k=2))
    big = failure_prob_bound(ConcatParams(10, 0.09, L=10**6, k=1))
    double = failure_prob_bound(ConcatParams(10, 0.09, L=2 * 10**6, k=1))
    assert double.p_fail_raw == pytest.approx(2 * big.p_fail_raw)
    assert big.p_fail == 1.0 and big.delta == 2.0


@pytest.mark.parametrize("m", [3, 4, 5])
def test_exact_badness_small_eps_against_rationals(m):
    from fractions import Fraction

    eps = Fraction(1, 1000)
    p = eps
    for k in range(1, 4):
        p = sum(math.comb(m, j) * p**j * (1 - p) ** (m - j) for j in range(2, m + 1))
        assert exact_badness(m, 1e-3, k) == pytest.approx(float(p), rel=1e-9)
