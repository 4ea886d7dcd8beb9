"""Exact linear-algebra substrate: states, operators, norms, measurement.

Bit convention (the only place it is defined): qubits are numbered from 0
and qubit 0 is the *most* significant bit of a basis index. For ``n`` qubits
the basis state ``|x_0 x_1 ... x_{n-1}>`` sits at index
``sum_q x_q * 2**(n - 1 - q)``, so ``StateVector.basis("01")`` is index 1.

Everything here is a pure function of its inputs (plus an explicit seed
where sampling happens).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .seeding import as_rng

NORM_TOL = 1e-10
ORTHO_TOL = 1e-9
ALGEBRA_TOL = 1e-12
ZERO_PROB = 1e-14

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI_MATRICES = {"I": I2, "X": X, "Y": Y, "Z": Z}


class DimensionError(ValueError):
    pass


def _n_qubits_for(length: int) -> int:
    n = int(length).bit_length() - 1
    if length < 1 or (1 << n) != length:
        raise DimensionError(f"length {length} is not a power of two")
    return n


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over ``n`` qubits; the norm is tracked, not enforced."""

    amplitudes: np.ndarray
    n_qubits: int = field(init=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "n_qubits", _n_qubits_for(amps.size))

    @classmethod
    def basis(cls, bits: str | Sequence[int]) -> "StateVector":
        bits = [int(b) for b in bits]
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[int("".join(map(str, bits)) or "0", 2)] = 1.0
        return cls(amps)

    @classmethod
    def zeros(cls, n: int) -> "StateVector":
        return cls.basis([0] * n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm < np.sqrt(ZERO_PROB):
            raise ValueError("cannot normalize a zero vector")
        return StateVector(self.amplitudes / nrm)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def polar(self) -> tuple[np.ndarray, np.ndarray]:
        """Moduli and phases of the amplitudes (phase 0 where the modulus is 0)."""
        r = np.abs(self.amplitudes)
        theta = np.where(r > 0, np.angle(self.amplitudes), 0.0)
        return r, theta

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.amplitudes + as_amplitudes(other))

    def __sub__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.amplitudes - as_amplitudes(other))

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.amplitudes * scalar)

    __rmul__ = __mul__


def as_amplitudes(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.amplitudes
    return np.asarray(state, dtype=complex).reshape(-1)


@dataclass(frozen=True)
class DenseOperator:
    """Square complex matrix. Hermiticity and unitarity are checked, never assumed."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be square, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def adjoint(self) -> "DenseOperator":
        return DenseOperator(self.matrix.conj().T)

    def is_hermitian(self, tol: float = NORM_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)

    def is_unitary(self, tol: float = NORM_TOL) -> bool:
        eye = np.eye(self.dim)
        return bool(np.max(np.abs(self.matrix.conj().T @ self.matrix - eye)) <= tol)

    def __matmul__(self, other):
        if isinstance(other, DenseOperator):
            return DenseOperator(self.matrix @ other.matrix)
        return NotImplemented


def as_matrix(op) -> np.ndarray:
    if isinstance(op, DenseOperator):
        return op.matrix
    if isinstance(op, PauliString):
        return op.to_matrix()
    m = np.asarray(op, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"operator must be square, got shape {m.shape}")
    return m


# --- Pauli strings -------------------------------------------------------

# (a, b) -> (phase exponent e, letter c) with a.b = i**e c
_PAULI_PRODUCT = {
    ("I", "I"): (0, "I"), ("I", "X"): (0, "X"), ("I", "Y"): (0, "Y"), ("I", "Z"): (0, "Z"),
    ("X", "I"): (0, "X"), ("X", "X"): (0, "I"), ("X", "Y"): (1, "Z"), ("X", "Z"): (3, "Y"),
    ("Y", "I"): (0, "Y"), ("Y", "X"): (3, "Z"), ("Y", "Y"): (0, "I"), ("Y", "Z"): (1, "X"),
    ("Z", "I"): (0, "Z"), ("Z", "X"): (1, "Y"), ("Z", "Y"): (3, "X"), ("Z", "Z"): (0, "I"),
}


@dataclass(frozen=True)
class PauliString:
    """``i**phase`` times a tensor product of single-qubit Paulis.

    ``letters[q]`` acts on qubit ``q`` (qubit 0 most significant).
    """

    letters: str
    phase: int = 0

    def __post_init__(self):
        letters = self.letters.upper()
        if not letters or set(letters) - set("IXYZ"):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        if not 0 <= qubit < n:
            raise IndexError(f"qubit {qubit} out of range for {n} qubits")
        return cls("I" * qubit + letter + "I" * (n - qubit - 1))

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls("I" * n)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not isinstance(other, PauliString):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise DimensionError("Pauli strings act on different qubit counts")
        phase = self.phase + other.phase
        out = []
        for a, b in zip(self.letters, other.letters):
            e, c = _PAULI_PRODUCT[(a, b)]
            phase += e
            out.append(c)
        return PauliString("".join(out), phase)

    def adjoint(self) -> "PauliString":
        return PauliString(self.letters, -self.phase)

    def to_matrix(self) -> np.ndarray:
        m = np.array([[1j**self.phase]], dtype=complex)
        for c in self.letters:
            m = np.kron(m, PAULI_MATRICES[c])
        return m

    def _masks(self):
        n = self.n_qubits
        flip = zmask = 0
        ny = 0
        for q, c in enumerate(self.letters):
            bit = 1 << (n - 1 - q)
            if c in "XY":
                flip |= bit
            if c in "ZY":
                zmask |= bit
            ny += c == "Y"
        return flip, zmask, ny

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        """Act on a full amplitude vector by index permutation and signs."""
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.size != 1 << self.n_qubits:
            raise DimensionError("Pauli string size does not match the state")
        flip, zmask, ny = self._masks()
        idx = np.arange(amps.size)
        # Y = i X Z, so Z-type signs are read off the *input* index.
        sign = 1 - 2 * (_popcount(idx & zmask) & 1)
        out = np.empty_like(amps)
        out[idx ^ flip] = amps * sign * (1j ** ((self.phase + ny) % 4))
        return out


def _popcount(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint64)
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(a).astype(np.int64)
    count = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        count += (a & 1).astype(np.int64)
        a = a >> np.uint64(1)
    return count


def popcount(a) -> np.ndarray:
    return _popcount(a)


# --- Applying operators --------------------------------------------------

def apply_operator(state, op, targets: Sequence[int] | None = None) -> StateVector:
    """Apply ``op`` to ``state`` exactly.

    ``op`` may be a :class:`DenseOperator` (or 2-d array) acting on
    ``targets``; a :class:`PauliString` on all qubits or on ``targets``; or
    any object exposing ``apply(amplitudes) -> amplitudes`` (the controlled
    error operators), which then acts on the whole register. Only dense
    operators are ever materialized, and only at the size of their targets.
    """
    sv = state if isinstance(state, StateVector) else StateVector(state)
    n = sv.n_qubits
    if targets is not None:
        targets = [int(t) for t in targets]
        if len(set(targets)) != len(targets):
            raise ValueError(f"target qubits must be distinct, got {targets}")
        for t in targets:
            if not 0 <= t < n:
                raise IndexError(f"target qubit {t} out of range for {n} qubits")

    if isinstance(op, PauliString):
        if targets is None:
            return StateVector(op.apply(sv.amplitudes))
        if len(targets) != op.n_qubits:
            raise DimensionError("Pauli string length does not match target count")
        letters = ["I"] * n
        for t, c in zip(targets, op.letters):
            letters[t] = c
        return StateVector(PauliString("".join(letters), op.phase).apply(sv.amplitudes))

    if hasattr(op, "apply") and not isinstance(op, (DenseOperator, np.ndarray)):
        if targets is not None:
            raise ValueError("controlled error operators act on the full register")
        return StateVector(op.apply(sv.amplitudes))

    m = as_matrix(op)
    if targets is None:
        targets = list(range(n))
    k = len(targets)
    if m.shape[0] != 1 << k:
        raise DimensionError(f"operator of dim {m.shape[0]} cannot act on {k} qubits")
    psi = sv.amplitudes.reshape((2,) * n)
    gate = m.reshape((2,) * (2 * k))
    out = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), targets))
    out = np.moveaxis(out, list(range(k)), targets)
    return StateVector(out.reshape(-1))


def inner_product(a, b) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    va, vb = as_amplitudes(a), as_amplitudes(b)
    if va.size != vb.size:
        raise DimensionError("states have different sizes")
    return complex(np.vdot(va, vb))


def fidelity(a, b) -> float:
    """Global-phase-invariant overlap ``|<a|b>|^2 / (<a|a><b|b>)``."""
    va, vb = as_amplitudes(a), as_amplitudes(b)
    num = abs(np.vdot(va, vb)) ** 2
    den = np.vdot(va, va).real * np.vdot(vb, vb).real
    return float(num / den)


# --- Norms and exponentials ----------------------------------------------

def operator_norm(op, tol: float = 1e-12, max_squarings: int = 60) -> float:
    """Largest singular value by power iteration on ``A* A``.

    The iteration matrix is squared repeatedly (``M, M^2, M^4, ...``,
    rescaled each time), so ``j`` squarings amount to ``2**j`` power steps;
    the dominant direction is then read off and the Rayleigh quotient of
    ``A* A`` taken on it. Stops when successive estimates agree to ``tol``.
    """
    a = as_matrix(op)
    m = a.conj().T @ a
    scale = np.linalg.norm(m)
    if scale == 0.0:
        return 0.0
    p = m / scale
    # fixed, non-special start vector keeps results deterministic
    d = m.shape[0]
    v0 = (1.0 + np.arange(d) / (d + 1.0)) * np.exp(0.37j * np.arange(d))
    est = 0.0
    for _ in range(max_squarings):
        v = p @ v0
        nv = np.linalg.norm(v)
        if nv == 0.0:
            v0 = np.roll(v0, 1) + 0.5
            continue
        v = v / nv
        new = float(np.vdot(v, m @ v).real)
        if abs(new - est) <= tol * max(new, 1e-300):
            est = new
            break
        est = new
        p = p @ p
        p /= np.linalg.norm(p)
    return float(np.sqrt(max(est, 0.0)))


def matrix_exp(h, t: float = 1.0) -> DenseOperator:
    """``exp(-i t H)`` for Hermitian ``H`` via its eigendecomposition."""
    m = as_matrix(h)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > NORM_TOL:
        raise ValueError("matrix_exp requires a Hermitian generator")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return DenseOperator((v * np.exp(-1j * t * w)) @ v.conj().T)


def embed(op, targets: Sequence[int], n: int) -> np.ndarray:
    """Full ``2^n`` matrix of ``op`` acting on ``targets`` (small n only)."""
    m = as_matrix(op)
    dim = 1 << n
    cols = [apply_operator(StateVector(np.eye(dim, dtype=complex)[:, j]), m, targets).amplitudes
            for j in range(dim)]
    return np.stack(cols, axis=1)


# --- Distributions and measurement ---------------------------------------

@dataclass(frozen=True)
class OutcomeDistribution:
    """Probability vector; entries down to -1e-12 are clamped to zero."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if np.any(p < -1e-12):
            raise ValueError("probabilities must be nonnegative")
        p = np.clip(p, 0.0, None)
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probabilities", p)

    def __len__(self):
        return self.probabilities.size


def l1_distance(p, q) -> float:
    """``sum_i |p_i - q_i|``; lies in [0, 2] for probability vectors."""
    pa = p.probabilities if isinstance(p, OutcomeDistribution) else np.asarray(p, dtype=float)
    qa = q.probabilities if isinstance(q, OutcomeDistribution) else np.asarray(q, dtype=float)
    if pa.shape != qa.shape:
        raise DimensionError("distributions have different lengths")
    return float(np.abs(pa - qa).sum())


def marginal_probabilities(state, qubits: Sequence[int]) -> np.ndarray:
    """Born probabilities of the outcomes on ``qubits`` (first listed = most significant)."""
    sv = state if isinstance(state, StateVector) else StateVector(state)
    n = sv.n_qubits
    qubits = list(qubits)
    psi = np.moveaxis(sv.amplitudes.reshape((2,) * n), qubits, list(range(len(qubits))))
    return (np.abs(psi.reshape(1 << len(qubits), -1)) ** 2).sum(axis=1)


def project(state, qubits: Sequence[int], outcome: Sequence[int]) -> StateVector:
    """Post-measurement state for a given outcome, renormalized."""
    sv = state if isinstance(state, StateVector) else StateVector(state)
    n = sv.n_qubits
    psi = sv.amplitudes.reshape((2,) * n).copy()
    keep = np.zeros_like(psi, dtype=bool)
    index = [slice(None)] * n
    for q, b in zip(qubits, outcome):
        index[q] = int(b)
    keep[tuple(index)] = True
    psi[~keep] = 0.0
    out = psi.reshape(-1)
    p = float(np.vdot(out, out).real)
    if p < ZERO_PROB:
        raise ValueError(f"outcome {tuple(outcome)} has probability {p:.3g} < {ZERO_PROB}")
    return StateVector(out / np.sqrt(p))


def measure_in_basis(state, qubits: Sequence[int], seed=None) -> tuple[tuple[int, ...], StateVector]:
    """Computational-basis measurement of ``qubits`` with Born sampling.

    Returns the outcome bits (in the order of ``qubits``) and the collapsed,
    renormalized state. Deterministic for a fixed seed.
    """
    sv = state if isinstance(state, StateVector) else StateVector(state)
    if not sv.is_normalized():
        raise ValueError(f"measurement needs a normalized state (norm {sv.norm():.12g})")
    qubits = [int(q) for q in qubits]
    for q in qubits:
        if not 0 <= q < sv.n_qubits:
            raise IndexError(f"qubit {q} out of range")
    probs = marginal_probabilities(sv, qubits)
    probs = np.where(probs < ZERO_PROB, 0.0, probs)
    rng = as_rng(seed)
    cdf = np.cumsum(probs / probs.sum())
    k = int(min(np.searchsorted(cdf, rng.random(), side="right"), probs.size - 1))
    while probs[k] == 0.0:  # guards the cdf tail against round-off
        k -= 1
    bits = tuple((k >> (len(qubits) - 1 - j)) & 1 for j in range(len(qubits)))
    return bits, project(sv, qubits, bits)


# --- Random objects (test and experiment inputs) --------------------------

def random_state(n: int, seed=None) -> StateVector:
    rng = as_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(v / np.linalg.norm(v))


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-random unitary (QR with the phase correction)."""
    rng = as_rng(seed)
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, seed=None, norm: float | None = None) -> np.ndarray:
    rng = as_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    if norm is not None:
        h = h * (norm / np.linalg.norm(h, 2))
    return h
