import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ftlab.faultpath import (
    AboveThresholdError, HamiltonianModel, Interaction, NonMarkovParams, PathCapError,
    counting_coeff_sum, eta_k, eta_recursion, exact_step, fault_path_expand, location_strength,
    measured_eta, multi_fault_check, nonmarkov_delta_bound, nonmarkov_threshold,
    path_norm_violations, random_model, required_level_nonmarkov, single_fault_coeff_sum,
    trotter_error_ratio, trotter_product, trotter_step,
)
from ftlab.qcore import Z, embed, matrix_exp, operator_norm, random_hermitian


def _direct_path_sum(model):
    # oracle: build every path as an explicit ordered product
    eye = np.eye(model.dim)
    free = matrix_exp(np.kron(model.h_system, np.eye(1 << model.n_bath))
                      + np.kron(np.eye(1 << model.n_system), model.h_bath), model.delta).matrix
    total = np.zeros((model.dim, model.dim), dtype=complex)
    micro = model.microlocations
    for choice in itertools.product((0, 1), repeat=len(micro)):
        pick = dict(zip(micro, choice))
        u = eye.astype(complex)
        for t in range(model.n_steps):
            step = free.copy()
            for a, term in enumerate(model.interactions[t]):
                step = step @ (-1j * model.delta * term.h if pick[(t, a)] else eye)
            u = step @ u
        total += u
    return total


def test_commuting_split_is_exact():
    hs = np.diag([0.3, -0.2])
    hb = 0.7 * Z
    model = HamiltonianModel(1, 1, hs, hb, ((),), 0.1, 0.1, 1.0)
    assert operator_norm(trotter_step(model, 0) - exact_step(model, 0)) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_trotter_error_second_order(seed):
    model = random_model(2, 1, n_steps=1, terms_per_step=3, delta=0.02, steps_per_gate=1, seed=seed)
    assert 3.5 <= trotter_error_ratio(model) <= 4.5


def test_unitarity_defect_first_order():
    model = random_model(2, 1, n_steps=1, terms_per_step=3, delta=0.01, steps_per_gate=1, seed=3)
    u = trotter_step(model, 0)
    defect = operator_norm(u.conj().T @ u - np.eye(model.dim))
    # (1 + D lam0)^2a - 1 covers U*U - I for a first-order interaction product
    assert defect <= (1 + model.delta * model.lam0) ** (2 * 3) - 1


def test_model_validation():
    h = random_hermitian(8, seed=0, norm=2.0)
    with pytest.raises(ValueError):
        HamiltonianModel(2, 1, np.eye(4), np.eye(2), ((Interaction((0,), h),),), 0.1, 0.1, 1.0)
    with pytest.raises(ValueError):
        HamiltonianModel(1, 1, np.array([[0, 1], [0, 0]]), np.eye(2), ((),), 0.1, 0.1, 1.0)
    with pytest.raises(ValueError):
        HamiltonianModel(1, 1, np.eye(2), np.eye(2), ((),), 0.1, 0.15, 1.0)


def test_zero_interaction_single_path():
    model = HamiltonianModel(1, 1, np.eye(2), Z, ((), ()), 0.1, 0.1, 1.0)
    fps = fault_path_expand(model)
    assert fps.n_paths == 1
    assert operator_norm(fps.path(0) - trotter_product(model)) <= 1e-12


def test_two_steps_one_micro_each():
    model = random_model(2, 1, n_steps=2, terms_per_step=1, seed=4)
    fps = fault_path_expand(model)
    assert fps.n_paths == 4
    assert operator_norm(fps.sum() - trotter_product(model)) <= 1e-12
    assert operator_norm(fps.sum() - _direct_path_sum(model)) <= 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_half_stack_paths_match_direct_enumeration(seed):
    model = random_model(2, 1, n_steps=3, terms_per_step=2, seed=seed)
    fps = fault_path_expand(model)
    assert fps.n_paths == 2 ** 6
    assert operator_norm(fps.sum() - _direct_path_sum(model)) <= 1e-12
    # path selection bookkeeping agrees with fault counts
    for idx in range(fps.n_paths):
        assert len(fps.selected(idx)) == fps.faults(idx)


def test_path_norms_bounded():
    fps = fault_path_expand(random_model(2, 1, n_steps=5, terms_per_step=2, seed=8))
    assert path_norm_violations(fps, samples=300, seed=1) <= 1 + 1e-12


def test_path_cap():
    model = random_model(2, 1, n_steps=7, terms_per_step=3, seed=0)
    with pytest.raises(PathCapError):
        fault_path_expand(model)


def test_multi_fault_bound():
    fps = fault_path_expand(random_model(2, 1, n_steps=6, terms_per_step=2, delta=0.02, seed=5))
    rep = multi_fault_check(fps)
    assert rep["f_norm"] <= rep["bound"]
    assert rep["eta"] == location_strength(fps.model)
    eta = measured_eta(fps, samples=10, seed=0)
    assert 0 < eta <= rep["eta"] + 1e-12


@pytest.mark.parametrize("k", range(2, 31))
def test_counting_identities(k):
    assert counting_coeff_sum(k) == 1
    assert single_fault_coeff_sum(k) == 1
    if k <= 12:
        # brute force over the subsets of a k-set
        subsets = [sum(bits) for bits in itertools.product((0, 1), repeat=k)]
        assert sum((-1) ** r * (r - 1) for r in subsets if r >= 2) == 1
        assert sum((-1) ** (r - 1) for r in subsets if r >= 1) == 1


def test_counting_examples():
    assert counting_coeff_sum(4) == 6 - 8 + 3
    assert single_fault_coeff_sum(1) == 1
    assert single_fault_coeff_sum(3) == 3 - 3 + 1
    with pytest.raises(ValueError):
        counting_coeff_sum(1)


def test_eta_k_closed_form_matches_recursion():
    for k in range(1, 7):
        p = NonMarkovParams(5, 1e-3, k=k)
        assert eta_k(p) == pytest.approx(eta_recursion(p)[-1], rel=1e-12)


def test_eta_fixed_point():
    for A in (2, 3, 7):
        star = nonmarkov_threshold(A, tol=1e-15)
        for k in range(1, 5):
            assert eta_k(NonMarkovParams(A, star, k=k)) == pytest.approx(star, rel=1e-9)


@given(st.integers(2, 40), st.floats(0.01, 0.99), st.integers(0, 6))
def test_below_threshold_contracts(A, frac, k):
    eta = frac * nonmarkov_threshold(A)
    assert eta_k(NonMarkovParams(A, eta, k=k)) <= eta * (1 + 1e-12)


def test_threshold_values():
    assert nonmarkov_threshold(2) == pytest.approx(1.0, abs=1e-11)
    star = nonmarkov_threshold(3)
    assert 3 * star * math.exp(star) == pytest.approx(1.0, abs=1e-10)
    assert star == pytest.approx(0.2576, abs=1e-4)
    vals = [nonmarkov_threshold(A) for A in range(2, 51)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def _direct_nonmarkov_level(A, eta, L, delta):
    if delta >= 2:
        return 0
    k = 0
    while nonmarkov_delta_bound(NonMarkovParams(A, eta, L, delta), k) > delta:
        k += 1
    return k


def test_required_level_nonmarkov_examples():
    assert required_level_nonmarkov(NonMarkovParams(3, 0.01, L=10, delta=1e-4)).k == 2
    assert required_level_nonmarkov(NonMarkovParams(3, 0.01, L=10, delta=2.0)).k == 0
    with pytest.raises(AboveThresholdError):
        required_level_nonmarkov(NonMarkovParams(3, 0.3))


@given(st.integers(2, 200), st.floats(0.01, 0.95), st.integers(1, 10**6), st.floats(1e-12, 1.9))
def test_required_level_nonmarkov_minimal(A, frac, L, delta):
    eta = frac * nonmarkov_threshold(A)
    choice = required_level_nonmarkov(NonMarkovParams(A, eta, L, delta))
    assert choice.k == _direct_nonmarkov_level(A, eta, L, delta)
    assert choice.delta_bound <= delta * (1 + 1e-12) or delta >= 2
