"""Trotterized system-bath evolution and its fault-path decomposition.

The joint space is system (most significant) tensor bath. One step is

    U_t = exp(-i D H_S) exp(-i D H_B) prod_a (I - i D H_SB,a)

with the product taken left to right in the listed order of the
interaction terms. Expanding every factor ``I - i D H_SB,a`` into its two
summands gives one operator per choice of microlocations: the fault paths.

All paths are enumerated by splitting the microlocations into an early and
a late half; each half is a batched stack of partial products, and path
``(i, j)`` is ``late[j] @ early[i]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .concat import _min_level
from .qcore import NORM_TOL, embed, matrix_exp, operator_norm, random_hermitian
from .seeding import as_rng

MAX_MICROLOCATIONS = 20
SUM_CHUNK = 1 << 16


class PathCapError(ValueError):
    """Too many microlocations to enumerate every fault path."""


class AboveThresholdError(ValueError):
    pass


# --- Model -----------------------------------------------------------------

@dataclass(frozen=True)
class Interaction:
    qubits: tuple[int, ...]
    h: np.ndarray  # full system x bath matrix


@dataclass(frozen=True)
class HamiltonianModel:
    n_system: int
    n_bath: int
    h_system: np.ndarray
    h_bath: np.ndarray
    interactions: tuple[tuple[Interaction, ...], ...]  # one tuple per step
    delta: float
    t0: float
    lam0: float

    def __post_init__(self):
        ds, db = 1 << self.n_system, 1 << self.n_bath
        if self.h_system.shape != (ds, ds) or self.h_bath.shape != (db, db):
            raise ValueError("H_S / H_B have the wrong dimension")
        for name, m in (("H_S", self.h_system), ("H_B", self.h_bath)):
            if not np.allclose(m, m.conj().T, atol=NORM_TOL, rtol=0):
                raise ValueError(f"{name} is not Hermitian")
        for step in self.interactions:
            for term in step:
                if term.h.shape != (self.dim, self.dim):
                    raise ValueError("interaction terms act on the full system x bath space")
                if not np.allclose(term.h, term.h.conj().T, atol=NORM_TOL, rtol=0):
                    raise ValueError(f"interaction on {term.qubits} is not Hermitian")
                if operator_norm(term.h) > self.lam0 * (1 + 1e-9):
                    raise ValueError(f"interaction on {term.qubits} exceeds lam0")
        ratio = self.t0 / self.delta
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("t0 / delta must be a positive integer")

    @property
    def dim(self) -> int:
        return 1 << (self.n_system + self.n_bath)

    @property
    def n_steps(self) -> int:
        return len(self.interactions)

    @property
    def steps_per_gate(self) -> int:
        return int(round(self.t0 / self.delta))

    @cached_property
    def microlocations(self) -> list[tuple[int, int]]:
        """``(step, term index)`` pairs in time order."""
        return [(t, a) for t, step in enumerate(self.interactions) for a in range(len(step))]

    def location_of(self, step: int, term: int) -> tuple[tuple[int, ...], int]:
        return self.interactions[step][term].qubits, step // self.steps_per_gate

    def full_hamiltonian(self, step: int) -> np.ndarray:
        db, ds = 1 << self.n_bath, 1 << self.n_system
        h = np.kron(self.h_system, np.eye(db)) + np.kron(np.eye(ds), self.h_bath)
        for term in self.interactions[step]:
            h = h + term.h
        return h

    def with_delta(self, delta: float) -> "HamiltonianModel":
        """Same Hamiltonians, new step length (t0 rescaled to keep t0/delta)."""
        return replace(self, delta=delta, t0=self.steps_per_gate * delta)


def random_model(n_system: int = 2, n_bath: int = 1, n_steps: int = 4, terms_per_step: int = 2,
                 delta: float = 0.05, steps_per_gate: int = 2, lam0: float = 1.0,
                 seed=None) -> HamiltonianModel:
    """Random model: unit-norm H_S and H_B; each interaction couples one system
    qubit (or a pair) to the whole bath, with norm in [lam0/2, lam0]."""
    rng = as_rng(seed)
    n = n_system + n_bath
    bath = tuple(range(n_system, n))
    supports = [(q,) for q in range(n_system)]
    if n_system >= 2:
        supports += [(q, q + 1) for q in range(n_system - 1)]
    steps = []
    for _ in range(n_steps):
        terms = []
        for _ in range(terms_per_step):
            qs = supports[rng.integers(len(supports))]
            local = random_hermitian(1 << (len(qs) + n_bath), rng, norm=lam0 * rng.uniform(0.5, 1.0))
            terms.append(Interaction(qs, embed(local, list(qs) + list(bath), n)))
        steps.append(tuple(terms))
    return HamiltonianModel(
        n_system, n_bath,
        random_hermitian(1 << n_system, rng, norm=1.0),
        random_hermitian(1 << n_bath, rng, norm=1.0),
        tuple(steps), delta, steps_per_gate * delta, lam0,
    )


# --- Trotter step ----------------------------------------------------------

def _free_step(model: HamiltonianModel) -> np.ndarray:
    db, ds = 1 << model.n_bath, 1 << model.n_system
    us = np.kron(matrix_exp(model.h_system, model.delta).matrix, np.eye(db))
    ub = np.kron(np.eye(ds), matrix_exp(model.h_bath, model.delta).matrix)
    return us @ ub


def _fault_factor(model: HamiltonianModel, step: int, term: int) -> np.ndarray:
    return -1j * model.delta * model.interactions[step][term].h


def trotter_step(model: HamiltonianModel, step: int) -> np.ndarray:
    u = _free_step(model)
    eye = np.eye(model.dim)
    for a in range(len(model.interactions[step])):
        u = u @ (eye + _fault_factor(model, step, a))
    return u


def trotter_product(model: HamiltonianModel) -> np.ndarray:
    u = np.eye(model.dim, dtype=complex)
    for t in range(model.n_steps):
        u = trotter_step(model, t) @ u
    return u


def exact_step(model: HamiltonianModel, step: int) -> np.ndarray:
    return matrix_exp(model.full_hamiltonian(step), model.delta).matrix


def trotter_error_ratio(model: HamiltonianModel, step: int = 0) -> float:
    """``err(D) / err(D/2)`` for one step; second-order local error gives about 4."""
    def err(m):
        return operator_norm(exact_step(m, step) - trotter_step(m, step))
    return err(model) / err(model.with_delta(model.delta / 2))


# --- Fault paths -----------------------------------------------------------

def _half_stack(model, free, steps):
    """All partial products over ``steps``; row bit b is microlocation b of the half."""
    d = model.dim
    stack = np.eye(d, dtype=complex)[None]
    faults = np.zeros(1, dtype=np.int64)
    micro: list[tuple[int, int]] = []
    for t in steps:
        terms = len(model.interactions[t])
        # the step acts as free @ F_0 @ F_1 ..., so the last factor hits the state first
        for a in reversed(range(terms)):
            g = _fault_factor(model, t, a)
            stack = np.concatenate([stack, g @ stack])
            faults = np.concatenate([faults, faults + 1])
            micro.append((t, a))
        stack = free @ stack
    # the stack doubles per microlocation, so row bit b selects micro[b]
    return stack, faults, micro


@dataclass
class FaultPathSet:
    """Every fault path of a model, stored as two half stacks."""

    model: HamiltonianModel
    early: np.ndarray = field(repr=False)
    late: np.ndarray = field(repr=False)
    early_faults: np.ndarray = field(repr=False)
    late_faults: np.ndarray = field(repr=False)
    early_micro: list = field(repr=False)
    late_micro: list = field(repr=False)

    @property
    def n_paths(self) -> int:
        return len(self.early) * len(self.late)

    @property
    def microlocations(self) -> list[tuple[int, int]]:
        return self.early_micro + self.late_micro

    def _split(self, index):
        return index % len(self.early), index // len(self.early)

    def path(self, index: int) -> np.ndarray:
        i, j = self._split(index)
        return self.late[j] @ self.early[i]

    def faults(self, index) -> np.ndarray:
        i, j = self._split(np.asarray(index))
        return self.early_faults[i] + self.late_faults[j]

    def selected(self, index: int) -> list[tuple[int, int]]:
        """Microlocations that carry an interaction factor in path ``index``."""
        i, j = self._split(index)
        out = [m for b, m in enumerate(self.early_micro) if (i >> b) & 1]
        out += [m for b, m in enumerate(self.late_micro) if (j >> b) & 1]
        return out

    def location_masks(self) -> tuple[list, np.ndarray, np.ndarray]:
        """Locations plus, per half, a bitmask of the locations each row touches."""
        locs = sorted({self.model.location_of(*m) for m in self.microlocations})
        index = {loc: n for n, loc in enumerate(locs)}

        def masks(micro, rows):
            out = np.zeros(rows, dtype=np.int64)
            r = np.arange(rows)
            for b, m in enumerate(micro):
                out |= np.where((r >> b) & 1, 1 << index[self.model.location_of(*m)], 0)
            return out

        return locs, masks(self.early_micro, len(self.early)), masks(self.late_micro, len(self.late))

    def sum(self, weight=None) -> np.ndarray:
        """Compensated sum of ``weight(i, j) * late[j] @ early[i]`` over all paths.

        ``weight`` receives broadcastable index arrays and returns 0/1 selections;
        ``None`` sums every path.
        """
        d = self.model.dim
        ne = len(self.early)
        # sum_j late[j] @ (sum_i w_ji early[i]): two GEMMs per chunk of j
        flat = self.early.reshape(ne, d * d)
        rows = max(1, SUM_CHUNK // ne)
        ei = np.arange(ne)
        total = np.zeros((d, d), dtype=complex)
        comp = np.zeros((d, d), dtype=complex)
        for start in range(0, len(self.late), rows):
            jj = np.arange(start, min(start + rows, len(self.late)))
            if weight is None:
                mixed = np.broadcast_to(flat.sum(axis=0), (len(jj), d * d))
            else:
                w = np.broadcast_to(weight(ei[None, :], jj[:, None]), (len(jj), ne)).astype(float)
                mixed = w @ flat
            left = self.late[jj].transpose(1, 0, 2).reshape(d, len(jj) * d)
            y = left @ mixed.reshape(len(jj) * d, d) - comp
            t = total + y
            comp = (t - total) - y
            total = t
        return total


def fault_path_expand(model: HamiltonianModel) -> FaultPathSet:
    n_micro = len(model.microlocations)
    if n_micro > MAX_MICROLOCATIONS:
        raise PathCapError(f"{n_micro} microlocations exceeds the cap of {MAX_MICROLOCATIONS}")
    free = _free_step(model)
    # split by step so each half is a contiguous block of time
    counts = np.cumsum([len(s) for s in model.interactions])
    cut = int(np.searchsorted(counts, n_micro / 2))
    cut = min(cut, model.n_steps)
    early, ef, em = _half_stack(model, free, range(0, cut))
    late, lf, lm = _half_stack(model, free, range(cut, model.n_steps))
    return FaultPathSet(model, early, late, ef, lf, em, lm)


def path_norm_violations(fps: FaultPathSet, samples: int = 200, seed=None) -> float:
    """Largest ``||path|| / (D lam0)^f`` over sampled paths (<= 1 expected)."""
    rng = as_rng(seed)
    dl = fps.model.delta * fps.model.lam0
    worst = 0.0
    for idx in rng.integers(fps.n_paths, size=samples):
        f = int(fps.faults(int(idx)))
        worst = max(worst, operator_norm(fps.path(int(idx))) / dl**f)
    return worst


# --- Location-level noise strength -------------------------------------------

def microlocations_per_location(model: HamiltonianModel) -> int:
    per_loc: dict = {}
    for m in model.microlocations:
        key = model.location_of(*m)
        per_loc[key] = per_loc.get(key, 0) + 1
    return max(per_loc.values(), default=0)


def location_strength(model: HamiltonianModel) -> float:
    """``(1 + D lam0)^l - 1`` with ``l`` the most microlocations in one location.

    Summing ``(D lam0)^f`` over the nonempty subsets of a location's
    microlocations gives exactly this, so it bounds the norm of the faulty part
    of any one location.
    """
    return (1 + model.delta * model.lam0) ** microlocations_per_location(model) - 1


def multi_fault_check(fps: FaultPathSet) -> dict:
    """Norm of the sum over paths with faults at two or more locations, against
    ``C(A,2) eta^2 exp((A-2) eta)``."""
    locs, em, lm = fps.location_masks()
    A = len(locs)
    eta = location_strength(fps.model)
    def two_plus(i, j):
        return _popcount64(em[i] | lm[j]) >= 2

    f_norm = operator_norm(fps.sum(two_plus)) if A >= 2 else 0.0
    bound = math.comb(A, 2) * eta**2 * math.exp((A - 2) * eta) if A >= 2 else 0.0
    first = fps.model.delta * fps.model.lam0 * microlocations_per_location(fps.model)
    return {
        "locations": A,
        "eta": eta,
        "f_norm": f_norm,
        "bound": bound,
        "first_order_bound": math.comb(A, 2) * first**2 * math.exp((A - 2) * first) if A >= 2 else 0.0,
    }


def _popcount64(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    out = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        out += a & 1
        a = a >> 1
    return out


def measured_eta(fps: FaultPathSet, samples: int = 20, seed=None) -> float:
    """``max ||E(R)||^(1/|R|)`` over sampled nonempty location sets ``R``.

    ``E(R)`` sums the paths whose faulty locations are exactly ``R``.
    """
    rng = as_rng(seed)
    locs, em, lm = fps.location_masks()
    A = len(locs)
    if A == 0:
        return 0.0
    best = 0.0
    for _ in range(samples):
        r = int(rng.integers(1, A + 1))
        chosen = rng.choice(A, size=r, replace=False)
        mask = int(sum(1 << int(c) for c in chosen))
        e = fps.sum(lambda i, j: (em[i] | lm[j]) == mask)
        best = max(best, operator_norm(e) ** (1.0 / r))
    return best


# --- Counting identities -----------------------------------------------------

def counting_coeff_sum(k: int) -> int:
    """``sum_{r=2}^k (-1)^r (r-1) C(k,r)``; equals 1 for every k >= 2."""
    if k < 2:
        raise ValueError("k must be >= 2")
    return sum((-1) ** r * (r - 1) * math.comb(k, r) for r in range(2, k + 1))


def single_fault_coeff_sum(k: int) -> int:
    """``sum_{r=1}^k (-1)^(r-1) C(k,r)``; equals 1 for every k >= 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return sum((-1) ** (r - 1) * math.comb(k, r) for r in range(1, k + 1))


# --- Non-Markovian threshold -------------------------------------------------

@dataclass(frozen=True)
class NonMarkovParams:
    A: int
    eta: float
    L: int = 1
    delta: float = 1.0
    k: int = 1

    def __post_init__(self):
        if self.A < 2:
            raise ValueError("A must be >= 2")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.L < 1 or self.k < 0:
            raise ValueError("need L >= 1 and k >= 0")
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    @property
    def pairs(self) -> int:
        return math.comb(self.A, 2)

    @property
    def growth(self) -> float:
        """``C(A,2) exp((A-2) eta)``."""
        return self.pairs * math.exp((self.A - 2) * self.eta)


def _log_eta_k(params: NonMarkovParams) -> float:
    if params.k == 0:
        return math.log(params.eta) if params.eta > 0 else -math.inf
    g = params.growth
    x = g * params.eta
    if x == 0.0:
        return -math.inf
    return (2**params.k) * math.log(x) - math.log(g)


def eta_k(params: NonMarkovParams) -> float:
    """``(C eta e^{(A-2)eta})^(2^k) / (C e^{(A-2)eta})``, with ``eta^(0) = eta``."""
    log_val = _log_eta_k(params)
    return math.exp(log_val) if log_val < 700 else math.inf


def eta_recursion(params: NonMarkovParams) -> list[float]:
    """``eta^(0..k)`` via ``eta^(j+1) = C (eta^(j))^2 e^{(A-2) eta}``."""
    out = [params.eta]
    for _ in range(params.k):
        nxt = params.growth * out[-1] ** 2 if out[-1] < 1e150 else math.inf
        out.append(nxt)
    return out


def nonmarkov_threshold(A: int, tol: float = 1e-12) -> float:
    """Root of ``C(A,2) eta e^{(A-2) eta} = 1`` by bisection (relative tolerance ``tol``)."""
    if A < 2:
        raise ValueError("A must be >= 2")
    log_c = math.log(math.comb(A, 2))
    lo, hi = 0.0, 1.0
    # relative tolerance: the root is about 2/A^2 for large A
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if log_c + math.log(mid) + (A - 2) * mid < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class LevelChoice:
    k: int
    eta_k: float
    b_norm_bound: float  # L eta^(k) e^{(L-1) eta^(k)}
    delta_bound: float  # 2 L eta^(k) e^{(L-1) eta}


def nonmarkov_delta_bound(params: NonMarkovParams, k: int) -> float:
    log_val = math.log(2 * params.L) + _log_eta_k(replace(params, k=k)) + (params.L - 1) * params.eta
    return math.exp(log_val) if log_val < 700 else math.inf


def required_level_nonmarkov(params: NonMarkovParams) -> LevelChoice:
    """Smallest k with
    ``2^k >= log(2L e^{(L-1)eta} / (C delta e^{(A-2)eta})) / log(1 / (C eta e^{(A-2)eta}))``."""
    A, eta, L, delta = params.A, params.eta, params.L, params.delta
    g = params.growth
    if g * eta >= 1.0:
        raise AboveThresholdError(f"C(A,2) eta e^((A-2)eta) = {g * eta:.6g} >= 1: above threshold")
    if delta >= 2.0 or eta == 0.0:
        k = 0
    else:
        num = math.log(2 * L / (g * delta)) + (L - 1) * eta
        k = _min_level(num / -math.log(g * eta))
    ek = eta_k(replace(params, k=k))
    b_log = math.log(L * ek) + (L - 1) * ek if ek > 0 else -math.inf
    b_norm = math.exp(b_log) if b_log < 700 else math.inf
    return LevelChoice(k, ek, b_norm, nonmarkov_delta_bound(params, k))
