"""The nine-qubit Shor code: encode, detect, correct, decode.

Qubits are 0-based here (qubit ``q`` of the code is bit ``q`` of the basis
label, most significant first), but the syndrome keeps the conventional
1-based labels so that 0 can mean "nothing detected":

* ``x_location = k`` means an X error on qubit ``k - 1`` (k = 1..9),
* ``z_block = l`` means a Z error somewhere in block ``l`` (l = 1..3),
  where block ``l`` holds qubits ``3(l-1) .. 3l-1``.

Syndrome extraction is a projective classification onto the 40
two-dimensional subspaces ``X^k Z^l |code>``. Superposed errors are
measured X-register first, then the Z register conditioned on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .qcore import (
    NORM_TOL,
    ZERO_PROB,
    PauliString,
    StateVector,
    apply_operator,
    as_amplitudes,
    fidelity,
)
from .seeding import as_rng

N_QUBITS = 9
CLASSIFY_TOL = 1e-9


class UnclassifiableStateError(ValueError):
    """The state is not a codeword hit by at most one single-qubit error."""


class CodeSpaceError(ValueError):
    """The state has a component outside span{|0>, |1>} of the code."""


@dataclass(frozen=True)
class Syndrome:
    x_location: int = 0
    z_block: int = 0

    def __post_init__(self):
        if not 0 <= self.x_location <= 9:
            raise ValueError(f"x_location must be in 0..9, got {self.x_location}")
        if not 0 <= self.z_block <= 3:
            raise ValueError(f"z_block must be in 0..3, got {self.z_block}")


@dataclass(frozen=True)
class LogicalQubit:
    alpha: complex
    beta: complex

    def __post_init__(self):
        nrm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {nrm!r}, expected 1")

    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)


def block_of(qubit: int) -> int:
    """1-based block holding 0-based ``qubit``."""
    return qubit // 3 + 1


def _block_state(sign: int) -> np.ndarray:
    v = np.zeros(8, dtype=complex)
    v[0], v[7] = 1.0, sign
    return v


@lru_cache(maxsize=None)
def _logical_basis() -> np.ndarray:
    zero = np.ones(1, dtype=complex)
    one = np.ones(1, dtype=complex)
    for _ in range(3):
        zero = np.kron(zero, _block_state(+1))
        one = np.kron(one, _block_state(-1))
    out = np.stack([zero, one]) / np.sqrt(8)
    out.setflags(write=False)
    return out


def logical_zero() -> StateVector:
    return StateVector(_logical_basis()[0].copy())


def logical_one() -> StateVector:
    return StateVector(_logical_basis()[1].copy())


def correction_operator(s: Syndrome) -> PauliString:
    """X on the flagged qubit, then Z on the first qubit of the flagged block."""
    z = PauliString.identity(N_QUBITS)
    if s.z_block:
        z = PauliString.single(N_QUBITS, 3 * (s.z_block - 1), "Z")
    x = PauliString.identity(N_QUBITS)
    if s.x_location:
        x = PauliString.single(N_QUBITS, s.x_location - 1, "X")
    return z * x


def _class_operator(k: int, l: int) -> PauliString:
    # X^k Z^l, with Z^l acting first
    xs = ["I"] * N_QUBITS
    zs = ["I"] * N_QUBITS
    if k:
        xs[k - 1] = "X"
    if l:
        zs[3 * (l - 1)] = "Z"
    return PauliString("".join(xs)) * PauliString("".join(zs))


@lru_cache(maxsize=None)
def _class_basis() -> np.ndarray:
    """Array (10, 4, 2, 512): orthonormal basis of each (k, l) class."""
    basis = _logical_basis()
    out = np.empty((10, 4, 2, 1 << N_QUBITS), dtype=complex)
    for k in range(10):
        for l in range(4):
            op = _class_operator(k, l)
            out[k, l, 0] = op.apply(basis[0])
            out[k, l, 1] = op.apply(basis[1])
    out.setflags(write=False)
    return out


def encode(q: LogicalQubit | tuple[complex, complex]) -> StateVector:
    """``alpha |0_L> + beta |1_L>`` for the Shor code."""
    if not isinstance(q, LogicalQubit):
        q = LogicalQubit(*q)
    return StateVector(q.alpha * _logical_basis()[0] + q.beta * _logical_basis()[1])


def classify(state) -> tuple[np.ndarray, np.ndarray, float]:
    """Class amplitudes, class probabilities (10 x 4) and the unclassified residual norm."""
    psi = as_amplitudes(state)
    if psi.size != 1 << N_QUBITS:
        raise ValueError("Shor code states have 9 qubits")
    cb = _class_basis()
    coeffs = np.einsum("klim,m->kli", cb.conj(), psi)
    probs = (np.abs(coeffs) ** 2).sum(axis=2)
    recon = np.einsum("kli,klim->m", coeffs, cb)
    residual = float(np.linalg.norm(psi - recon))
    return coeffs, probs, residual


def extract_syndrome(state, seed=None) -> tuple[Syndrome, StateVector]:
    """Measure the (k, l) syndrome and collapse the state onto its class.

    Raises
    ------
    UnclassifiableStateError
        If more than ``1e-9`` of the state's norm lies outside the span of
        the single-error images of the code.
    """
    sv = state if isinstance(state, StateVector) else StateVector(state)
    coeffs, probs, residual = classify(sv)
    total = sv.norm()
    if residual > CLASSIFY_TOL * max(total, 1.0):
        raise UnclassifiableStateError(
            f"residual {residual:.3g} outside the single-error classes (multi-qubit damage?)"
        )
    probs = np.where(probs < ZERO_PROB, 0.0, probs)
    probs = probs / probs.sum()
    support = np.argwhere(probs > 0)
    if len(support) == 1:
        k, l = (int(v) for v in support[0])
    else:
        rng = as_rng(seed)
        pk = probs.sum(axis=1)
        k = _sample(pk, rng)
        l = _sample(probs[k] / pk[k], rng)
    c = coeffs[k, l]
    collapsed = c @ _class_basis()[k, l]
    return Syndrome(k, l), StateVector(collapsed / np.linalg.norm(collapsed))


def _sample(p: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(p)
    i = int(min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), p.size - 1))
    while p[i] == 0.0:
        i -= 1
    return i


def correct(state, s: Syndrome) -> StateVector:
    """Apply ``X^k``, then a Z on the first qubit of block ``l``."""
    return apply_operator(state, correction_operator(s))


def detect_and_correct(state, seed=None) -> tuple[Syndrome, StateVector]:
    s, collapsed = extract_syndrome(state, seed)
    return s, correct(collapsed, s)


def correct_any_single_qubit_error(state, m, k: int, seed=None) -> StateVector:
    """Hit qubit ``k`` with an arbitrary 2x2 operator ``m``, then detect and correct.

    ``m`` need not be unitary; the damaged state is renormalized before the
    syndrome measurement, as the measurement itself would do.
    """
    damaged = apply_operator(state, m, [k])
    damaged = damaged.normalized()
    _, fixed = detect_and_correct(damaged, seed)
    return fixed


def decode(state) -> LogicalQubit:
    """Logical amplitudes ``(<0_L|psi>, <1_L|psi>)``, renormalized."""
    psi = as_amplitudes(state)
    basis = _logical_basis()
    c = basis.conj() @ psi
    residual = float(np.linalg.norm(psi - c @ basis))
    if residual > CLASSIFY_TOL * max(float(np.linalg.norm(psi)), 1.0):
        raise CodeSpaceError(f"state has residual {residual:.3g} outside the code space")
    c = c / np.linalg.norm(c)
    return LogicalQubit(complex(c[0]), complex(c[1]))


# --- Full stabilizer error correction --------------------------------------

def stabilizer_generators() -> list[PauliString]:
    """Six ZZ checks (two per block) followed by the two six-qubit X checks."""
    gens = []
    for b in range(3):
        for a in (0, 1):
            letters = ["I"] * N_QUBITS
            letters[3 * b + a] = letters[3 * b + a + 1] = "Z"
            gens.append(PauliString("".join(letters)))
    gens.append(PauliString("XXXXXXIII"))
    gens.append(PauliString("IIIXXXXXX"))
    return gens


_FLIP_LOOKUP = {(0, 0): None, (1, 0): 0, (1, 1): 1, (0, 1): 2}


def lookup_correction(bits: tuple[int, ...]) -> PauliString:
    """Minimum-weight recovery for an 8-bit stabilizer syndrome.

    Each block gets at most one X from its two ZZ checks; the X checks pick
    at most one block for a Z, placed on that block's first qubit.
    """
    letters = ["I"] * N_QUBITS
    for b in range(3):
        q = _FLIP_LOOKUP[(bits[2 * b], bits[2 * b + 1])]
        if q is not None:
            letters[3 * b + q] = "X"
    block = _FLIP_LOOKUP[(bits[6], bits[7])]
    p = PauliString("".join(letters))
    if block is not None:
        p = p * PauliString.single(N_QUBITS, 3 * block, "Z")
    return p


def measure_stabilizers(state, seed=None) -> tuple[tuple[int, ...], StateVector]:
    """Projective measurement of all eight generators, in order."""
    rng = as_rng(seed)
    psi = as_amplitudes(state).copy()
    psi = psi / np.linalg.norm(psi)
    bits = []
    for g in stabilizer_generators():
        gpsi = g.apply(psi)
        plus = (psi + gpsi) / 2
        p_plus = float(np.vdot(plus, plus).real)
        if p_plus < ZERO_PROB:
            outcome = 1
        elif p_plus > 1 - ZERO_PROB:
            outcome = 0
        else:
            outcome = int(rng.random() >= p_plus)
        proj = plus if outcome == 0 else (psi - gpsi) / 2
        psi = proj / np.linalg.norm(proj)
        bits.append(outcome)
    return tuple(bits), StateVector(psi)


def stabilizer_ec(state, seed=None) -> StateVector:
    """Measure every generator and apply the lookup recovery; output is a codeword."""
    bits, collapsed = measure_stabilizers(state, seed)
    return apply_operator(collapsed, lookup_correction(bits))


# --- Reporting ------------------------------------------------------------

def reference_states() -> dict[str, StateVector]:
    return {
        "zero": encode((1, 0)),
        "one": encode((0, 1)),
        "plus": encode((1 / np.sqrt(2), 1 / np.sqrt(2))),
    }


def syndrome_table(seed: int = 0) -> list[dict]:
    """One row per single-qubit Pauli error: its syndrome and recovery fidelities."""
    rows = []
    refs = reference_states()
    for q in range(N_QUBITS):
        for letter in "XYZ":
            err = PauliString.single(N_QUBITS, q, letter)
            row = {"qubit": q + 1, "pauli": letter}
            fids = {}
            syn = None
            for name, ref in refs.items():
                s, fixed = detect_and_correct(apply_operator(ref, err), seed)
                syn = s
                fids[name] = fidelity(fixed, ref)
            row["k"], row["l"] = syn.x_location, syn.z_block
            row.update({f"fidelity_{n}": v for n, v in fids.items()})
            rows.append(row)
    return rows
