"""Controlled bit flips, controlled phase flips and what codes can do about them.

A controlled bit flip ``E_{i,S}`` flips qubit ``i`` exactly when the other
``n-1`` bits, read in order with qubit ``i`` removed, spell an element of
``S``. Subsets are encoded as integers in that reduced order. A controlled
phase ``E_{S,theta}`` multiplies the amplitude of each ``x in S`` by
``e^{i theta}``; a partition operator multiplies ``x in S_j`` by ``i^(j-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import ORTHO_TOL, NORM_TOL, StateVector, as_amplitudes, apply_operator
from .seeding import as_rng


def _subset_mask(members, size: int) -> np.ndarray:
    if callable(members):
        mask = np.asarray(members(np.arange(size)), dtype=bool)
        if mask.shape != (size,):
            raise ValueError("subset predicate must return one boolean per element")
        return mask
    arr = np.asarray(members)
    if arr.dtype == bool:
        if arr.shape != (size,):
            raise ValueError(f"boolean subset mask needs length {size}")
        return arr
    mask = np.zeros(size, dtype=bool)
    if arr.size:
        if arr.min() < 0 or arr.max() >= size:
            raise ValueError("subset element out of range")
        mask[arr.astype(np.int64)] = True
    return mask


def _n_of(amps: np.ndarray) -> int:
    n = int(amps.size).bit_length() - 1
    if 1 << n != amps.size:
        raise ValueError("state length is not a power of two")
    return n


@dataclass(frozen=True)
class CbitError:
    """``E_{i,S}`` on qubit ``i`` (0-based, most significant first)."""

    i: int
    S: object = ()

    def mask(self, n: int) -> np.ndarray:
        if not 0 <= self.i < n:
            raise IndexError(f"qubit {self.i} out of range for {n} qubits")
        return _subset_mask(self.S, 1 << (n - 1))

    def apply(self, amps: np.ndarray) -> np.ndarray:
        amps = np.asarray(amps)
        n = _n_of(amps)
        m = self.mask(n)
        hi, lo = 1 << self.i, 1 << (n - 1 - self.i)
        m = m.reshape(hi, lo)
        v = amps.reshape(hi, 2, lo)
        out = v.copy()
        out[:, 0, :] = np.where(m, v[:, 1, :], v[:, 0, :])
        out[:, 1, :] = np.where(m, v[:, 0, :], v[:, 1, :])
        return out.reshape(-1)


@dataclass(frozen=True)
class CphaseError:
    S: object = ()
    theta: float = 0.0

    def apply(self, amps: np.ndarray) -> np.ndarray:
        amps = np.asarray(amps)
        m = _subset_mask(self.S, amps.size)
        return np.where(m, np.exp(1j * self.theta) * amps, amps)

    def adjoint(self) -> "CphaseError":
        return CphaseError(self.S, -self.theta)


@dataclass(frozen=True)
class PartitionOp:
    """Four-phase operator; ``labels[x] = j - 1`` puts ``x`` in ``S_j``."""

    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 1 or np.any((lab < 0) | (lab > 3)):
            raise ValueError("labels must be a 1-D array with values in 0..3")

    @classmethod
    def from_sets(cls, n: int, sets) -> "PartitionOp":
        if len(sets) != 4:
            raise ValueError("need exactly four sets")
        labels = np.full(1 << n, -1, dtype=np.int64)
        for j, s in enumerate(sets):
            m = _subset_mask(s, 1 << n)
            if np.any(m & (labels >= 0)):
                raise ValueError("partition sets overlap")
            labels[m] = j
        if np.any(labels < 0):
            raise ValueError("partition sets do not cover every string")
        return cls(labels)

    def sets(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == j) for j in range(4)]

    def phases(self) -> np.ndarray:
        return 1j ** np.asarray(self.labels)

    def apply(self, amps: np.ndarray) -> np.ndarray:
        return self.phases() * np.asarray(amps)


def apply_cbit(e: CbitError, state) -> StateVector:
    return StateVector(e.apply(as_amplitudes(state)))


def apply_cphase(e: CphaseError, state) -> StateVector:
    return StateVector(e.apply(as_amplitudes(state)))


# --- Codes --------------------------------------------------------------------

class DegenerateCodeError(ValueError):
    pass


@dataclass(frozen=True)
class CodeSpace:
    n: int
    basis: tuple[StateVector, ...]

    def __post_init__(self):
        if not self.basis:
            raise ValueError("a code needs at least one basis vector")
        for b in self.basis:
            if b.n_qubits != self.n:
                raise ValueError("basis vectors must all have n qubits")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def matrix(self) -> np.ndarray:
        return np.stack([b.amplitudes for b in self.basis])

    def gram(self) -> np.ndarray:
        m = self.matrix()
        return m.conj() @ m.T

    def condition_number(self) -> float:
        return float(np.linalg.cond(self.gram()))

    def orthonormal(self) -> np.ndarray:
        """Rows form an orthonormal basis of the span (Gram-Schmidt order kept)."""
        q, r = np.linalg.qr(self.matrix().T)
        d = np.abs(np.diag(r))
        if d.min() <= ORTHO_TOL * max(d.max(), 1.0):
            raise DegenerateCodeError("basis vectors are linearly dependent")
        # fix phases so row a has a positive overlap with basis vector a
        q = q * (np.diag(r) / d)[None, :]
        return q.T


def random_code(n: int, dim: int = 2, seed=None) -> CodeSpace:
    rng = as_rng(seed)
    vecs = rng.normal(size=(dim, 1 << n)) + 1j * rng.normal(size=(dim, 1 << n))
    return CodeSpace(n, tuple(StateVector(v / np.linalg.norm(v)) for v in vecs))


def shor_code() -> CodeSpace:
    from .shor import logical_one, logical_zero

    return CodeSpace(9, (logical_zero(), logical_one()))


def _act(op, amps: np.ndarray) -> np.ndarray:
    if op is None:
        return amps
    return apply_operator(amps, op).amplitudes


@dataclass(frozen=True)
class CorrectionCheck:
    passed: bool
    c: complex
    deviation: float
    witness: tuple[np.ndarray, np.ndarray] | None = None
    witness_value: complex = 0.0


def corrects_check(code: CodeSpace, A, B, tol: float = 1e-9) -> CorrectionCheck:
    """Does the code correct the pair ``(A, B)``?

    The requirement is ``<phi|A* B|psi> = 0`` for every orthogonal codeword
    pair. Polarization turns this into ``T = c I`` for the matrix
    ``T_ab = <b_a|A* B|b_b>`` in an orthonormal basis. On failure an explicit
    orthonormal codeword pair with a nonzero value is returned.
    ``None`` stands for the identity.
    """
    q = code.orthonormal()
    aq = np.stack([_act(A, v) for v in q])
    bq = np.stack([_act(B, v) for v in q])
    T = aq.conj() @ bq.T
    k = code.dim
    c = complex(np.trace(T) / k)
    dev = T - c * np.eye(k)
    deviation = float(np.linalg.norm(dev, 2))
    if deviation <= tol:
        return CorrectionCheck(True, c, deviation)
    phi, psi = _witness(q, T)
    val = np.vdot(_act(A, phi), _act(B, psi))
    return CorrectionCheck(False, c, deviation, (phi, psi), complex(val))


def _witness(q: np.ndarray, T: np.ndarray):
    # candidates: basis pairs and their +-, +-i rotations; largest |<u|T|v>| wins
    k = len(q)
    best, pair = -1.0, None
    for a in range(k):
        for b in range(a + 1, k):
            cands = [(np.eye(k)[a], np.eye(k)[b])]
            for ph in (1, 1j):
                u = (np.eye(k)[a] + ph * np.eye(k)[b]) / np.sqrt(2)
                v = (np.eye(k)[a] - ph * np.eye(k)[b]) / np.sqrt(2)
                cands.append((u, v))
            for u, v in cands:
                for x, y in ((u, v), (v, u)):
                    val = abs(x.conj() @ T @ y)
                    if val > best:
                        best, pair = val, (x, y)
    u, v = pair
    return u @ q, v @ q


# --- Impossibility of correcting singleton cbit errors ------------------------

@dataclass(frozen=True)
class UniformityReport:
    dim: int
    found: bool
    i: int | None = None
    s: int | None = None
    value: float = 0.0
    checked: int = 0
    note: str = ""


def uniformity_demonstration(code: CodeSpace, tol: float = 1e-6, samples: int | None = None,
                             seed=None) -> UniformityReport:
    """Search singleton errors ``E_{i,{s}}`` for one the code cannot correct
    against the identity.

    Only a completely uniform codeword passes every such check, so any code of
    dimension at least 2 must yield a witness. ``s`` runs over all ``2^(n-1)``
    strings when ``samples`` is ``None``, otherwise over a seeded sample per qubit.
    """
    if code.dim < 2:
        return UniformityReport(code.dim, False, note="dimension 1: no orthogonal codeword pairs")
    rng = as_rng(seed)
    n = code.n
    checked = 0
    for i in range(n):
        if samples is None or samples >= 1 << (n - 1):
            ss = range(1 << (n - 1))
        else:
            ss = np.sort(rng.choice(1 << (n - 1), size=samples, replace=False))
        for s in ss:
            checked += 1
            res = corrects_check(code, None, CbitError(i, [int(s)]), tol=tol)
            if not res.passed and abs(res.witness_value) > tol:
                return UniformityReport(code.dim, True, i, int(s), abs(res.witness_value), checked)
    return UniformityReport(code.dim, False, checked=checked, note="no witness among checked singletons")


# --- Phase separation ------------------------------------------------------------

def overlap(phi, psi) -> float:
    return float(np.sum(np.abs(as_amplitudes(phi)) * np.abs(as_amplitudes(psi))))


def overlap_pick(phi, psi) -> tuple[StateVector, StateVector, float]:
    """An orthonormal pair with ``sum_x |phi(x)| |psi(x)| >= 1/2``.

    Returns the input pair if it already qualifies, else ``(phi +- psi)/sqrt 2``.
    """
    a, b = as_amplitudes(phi), as_amplitudes(psi)
    if abs(np.linalg.norm(a) - 1) > NORM_TOL or abs(np.linalg.norm(b) - 1) > NORM_TOL:
        raise ValueError("inputs must be unit vectors")
    if abs(np.vdot(a, b)) > NORM_TOL:
        raise ValueError("inputs must be orthogonal")
    ov = overlap(a, b)
    if ov >= 0.5:
        return StateVector(a), StateVector(b), ov
    u, v = (a + b) / np.sqrt(2), (a - b) / np.sqrt(2)
    return StateVector(u), StateVector(v), overlap(u, v)


SEPARATION_FLOOR = 1 - np.sqrt(2 - np.sqrt(2))


def _wrap(angle):
    return (np.asarray(angle) + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True)
class PartitionResult:
    op: PartitionOp
    violation: float
    overlap: float
    zeta: np.ndarray

    @property
    def floor(self) -> float:
        return SEPARATION_FLOOR * self.overlap


def cphase_partition(phi, psi) -> PartitionResult:
    """Four-phase partition maximizing alignment of ``<phi|E|psi>``.

    Each ``x`` goes to the ``S_j`` whose phase ``(j-1) pi/2`` brings
    ``theta'_x - theta_x`` closest to 0, leaving ``|zeta_x| <= pi/4``.
    Strings where either amplitude vanishes go to ``S_1``; ties go to the
    smallest ``j``.
    """
    a, b = as_amplitudes(phi), as_amplitudes(psi)
    rel = np.angle(b) - np.angle(a)
    cand = _wrap(rel[:, None] + np.arange(4)[None, :] * (np.pi / 2))
    labels = np.argmin(np.abs(cand), axis=1)
    zero = (a == 0) | (b == 0)
    labels[zero] = 0
    zeta = np.abs(cand[np.arange(a.size), labels])
    zeta[zero] = 0.0
    op = PartitionOp(labels)
    val = abs(np.vdot(a, op.apply(b)))
    return PartitionResult(op, float(val), overlap(a, b), zeta)


def separation_violation(code: CodeSpace) -> PartitionResult:
    """Full pipeline on a dim-2 code: orthonormalize, pick, partition."""
    if code.dim != 2:
        raise ValueError("separation demo expects a dimension-2 code")
    q = code.orthonormal()
    phi, psi, _ = overlap_pick(q[0], q[1])
    return cphase_partition(phi, psi)
