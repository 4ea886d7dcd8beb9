import numpy as np
import pytest
from hypothesis import given, strategies as st

from ftlab.ctrlnoise import (
    SEPARATION_FLOOR, CbitError, CodeSpace, CphaseError, DegenerateCodeError, PartitionOp,
    apply_cbit, apply_cphase, corrects_check, cphase_partition, overlap_pick, overlap,
    random_code, separation_violation, shor_code, uniformity_demonstration,
)
from ftlab.qcore import PauliString, StateVector, random_state


def _cbit_oracle(amps, i, S, n):
    # loop over basis strings, flipping bit i when the others spell a member of S
    out = np.array(amps, dtype=complex)
    for x in range(1 << n):
        bits = format(x, f"0{n}b")
        rest = int(bits[:i] + bits[i + 1:], 2) if n > 1 else 0
        if rest in S:
            y = x ^ (1 << (n - 1 - i))
            out[y] = amps[x]
    return out


def test_cbit_example():
    bell = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2))
    out = apply_cbit(CbitError(0, [0]), bell)
    assert np.allclose(out.amplitudes, np.array([0, 0, 1, 1]) / np.sqrt(2))


@given(st.integers(1, 5), st.data())
def test_cbit_matches_oracle_and_is_involution(n, data):
    i = data.draw(st.integers(0, n - 1))
    S = data.draw(st.sets(st.integers(0, (1 << (n - 1)) - 1)))
    amps = random_state(n, seed=data.draw(st.integers(0, 10**6))).amplitudes
    e = CbitError(i, sorted(S))
    out = e.apply(amps)
    assert np.allclose(out, _cbit_oracle(amps, i, S, n))
    assert np.allclose(e.apply(out), amps)
    assert np.linalg.norm(out) == pytest.approx(1.0)


def test_cbit_empty_set_and_predicate():
    amps = random_state(3, seed=1).amplitudes
    assert np.array_equal(CbitError(1, []).apply(amps), amps)
    pred = CbitError(1, lambda r: r % 2 == 1)
    assert np.allclose(pred.apply(amps), CbitError(1, [1, 3]).apply(amps))
    with pytest.raises(IndexError):
        CbitError(3, []).apply(amps)


@given(st.integers(1, 5), st.data())
def test_cphase_unitary(n, data):
    S = sorted(data.draw(st.sets(st.integers(0, (1 << n) - 1))))
    theta = data.draw(st.floats(0, 2 * np.pi, exclude_max=True))
    amps = random_state(n, seed=data.draw(st.integers(0, 10**6))).amplitudes
    e = CphaseError(S, theta)
    out = e.apply(amps)
    assert np.linalg.norm(out) == pytest.approx(1.0)
    assert np.allclose(e.adjoint().apply(out), amps)
    for x in range(1 << n):
        assert out[x] == pytest.approx(amps[x] * (np.exp(1j * theta) if x in S else 1))


def test_cphase_trivial_cases():
    amps = random_state(2, seed=0).amplitudes
    assert np.allclose(apply_cphase(CphaseError([0, 2], 0.0), amps).amplitudes, amps)
    assert np.allclose(apply_cphase(CphaseError([], 1.0), amps).amplitudes, amps)


def test_partition_phase_table_from_composition():
    n = 3
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 4, size=1 << n)
    sets = [np.flatnonzero(labels == j) for j in range(4)]
    op = PartitionOp.from_sets(n, sets)
    s24 = np.concatenate([sets[1], sets[3]])
    s34 = np.concatenate([sets[2], sets[3]])
    amps = random_state(n, seed=2).amplitudes
    composed = CphaseError(s24, -np.pi / 2).adjoint().apply(CphaseError(s34, np.pi).apply(amps))
    assert np.allclose(composed, op.apply(amps))
    assert np.allclose(op.phases(), np.exp(1j * labels * np.pi / 2))


def test_partition_must_cover_and_be_disjoint():
    with pytest.raises(ValueError):
        PartitionOp.from_sets(1, [[0], [], [], []])
    with pytest.raises(ValueError):
        PartitionOp.from_sets(1, [[0, 1], [1], [], []])


def test_codespace_degenerate():
    v = random_state(2, seed=0)
    code = CodeSpace(2, (v, v * 2.0))
    with pytest.raises(DegenerateCodeError):
        corrects_check(code, None, None)


def test_corrects_check_identity_and_pauli_pair():
    code = shor_code()
    res = corrects_check(code, None, None)
    assert res.passed and res.c == pytest.approx(1.0)
    x1, x2 = PauliString.single(9, 0, "X"), PauliString.single(9, 1, "X")
    res = corrects_check(code, x1, x2)
    assert res.passed and res.deviation < 1e-10


def test_corrects_check_singleton_fails_with_witness():
    code = shor_code()
    res = corrects_check(code, None, CbitError(0, [0]))
    assert not res.passed
    phi, psi = res.witness
    assert abs(np.vdot(phi, psi)) < 1e-10
    assert abs(res.witness_value) > 1e-6


def test_fact_equal_diagonals_when_passing():
    code = shor_code()
    A, B = PauliString.single(9, 4, "Z"), PauliString.single(9, 7, "Y")
    assert corrects_check(code, A, B).passed
    q = code.orthonormal()
    rng = np.random.default_rng(3)
    for _ in range(100):
        c = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        u, _ = np.linalg.qr(c)
        phi, psi = u[:, 0] @ q, u[:, 1] @ q
        def diag(v):
            return np.vdot(A.apply(v), B.apply(v))
        assert abs(diag(phi) - diag(psi)) <= 1e-9


def test_uniformity_shor_and_random_codes():
    rep = uniformity_demonstration(shor_code())
    assert rep.found and rep.value > 1e-6
    for seed in range(20):
        code = random_code(int(np.random.default_rng(seed).integers(2, 7)), seed=seed)
        assert uniformity_demonstration(code).found


def test_uniform_single_codeword_passes():
    n = 3
    code = CodeSpace(n, (StateVector(np.full(1 << n, 1 / np.sqrt(1 << n))),))
    for i in range(n):
        for s in range(1 << (n - 1)):
            assert corrects_check(code, None, CbitError(i, [s])).passed
    assert not uniformity_demonstration(code).found


def test_overlap_pick_examples():
    zero, one = StateVector.basis("0"), StateVector.basis("1")
    u, v, ov = overlap_pick(zero, one)
    assert ov == pytest.approx(1.0)
    assert abs(np.vdot(u.amplitudes, v.amplitudes)) < 1e-12
    a = np.array([0.6, 0.8])
    b = np.array([0.8, -0.6])
    u, v, ov = overlap_pick(StateVector(a), StateVector(b))
    assert np.array_equal(u.amplitudes, a) and ov == pytest.approx(0.96)
    with pytest.raises(ValueError):
        overlap_pick(zero, StateVector(a))


def test_partition_real_amplitudes_gives_overlap():
    rng = np.random.default_rng(4)
    a = rng.normal(size=8)
    a /= np.linalg.norm(a)
    b = a * np.where(rng.random(8) < 0.5, 1, -1)
    res = cphase_partition(a, b)
    assert np.all(res.zeta <= 1e-12)
    assert res.violation == pytest.approx(overlap(a, b), abs=1e-12)


def test_separation_floor_value():
    assert SEPARATION_FLOOR / 2 == pytest.approx(0.1173, abs=1e-4)


@pytest.mark.parametrize("n", range(2, 7))
def test_separation_on_random_codes(n):
    for seed in range(40):
        res = separation_violation(random_code(n, seed=1000 * n + seed))
        assert res.overlap >= 0.5 - 1e-9
        assert np.all(res.zeta <= np.pi / 4 + 1e-12)
        assert res.violation >= res.floor - 1e-9
        assert res.violation > 0.1
