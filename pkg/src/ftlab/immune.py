"""Influence of Boolean functions and the product codes built from them.

Functions take values in {+1/2, -1/2} and are stored as truth tables indexed
by the input read most-significant-bit first. For a balanced ``f`` on ``n'``
bits and ``B`` logical qubits the code on ``n = 2 B n'`` qubits is spanned by

    f_z(x) = prod_k f(x_{k, z_k}),   z in {0,1}^B,

where ``x = x_{1,0} x_{1,1} ... x_{B,0} x_{B,1}`` splits into ``n'``-bit blocks.

For a single controlled bit flip the self-overlap drops by exactly
``sum_{y in S} |phi(y,0) - phi(y,1)|^2``, and summing that over all ``y``
gives ``2^(n-1) I_i(phi)``; the sweeps below use this identity and
cross-check it against direct application of the error.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .ctrlnoise import CbitError
from .qcore import as_amplitudes
from .seeding import as_rng

RESIDUAL_TOL = 1e-9


def _bits(n: int) -> int:
    b = n.bit_length() - 1
    if n < 1 or 1 << b != n:
        raise ValueError(f"table length {n} is not a power of two")
    return b


def flip_differences(table, i: int) -> np.ndarray:
    """``phi(y,0) - phi(y,1)`` for every ``y`` in the reduced order of qubit ``i``."""
    t = np.asarray(table)
    n = _bits(t.size)
    if not 0 <= i < n:
        raise IndexError(f"bit {i} out of range for {n} bits")
    v = t.reshape(1 << i, 2, 1 << (n - 1 - i))
    return (v[:, 0, :] - v[:, 1, :]).reshape(-1)


def influence(table, i: int) -> float:
    """``E_x |f(x) - f(x xor e_i)|^2``."""
    d = flip_differences(table, i)
    return float(np.mean(np.abs(d) ** 2))


def influences(table) -> np.ndarray:
    n = _bits(np.asarray(table).size)
    return np.array([influence(table, i) for i in range(n)])


@dataclass(frozen=True)
class BooleanFunction:
    n_prime: int
    table: np.ndarray
    influence_per_bit: np.ndarray = field(init=False, repr=False)
    influence: float = field(init=False)

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.size != 1 << self.n_prime:
            raise ValueError("table length must be 2^n'")
        if not np.all(np.abs(np.abs(t) - 0.5) == 0):
            raise ValueError("values must be +1/2 or -1/2")
        object.__setattr__(self, "table", t)
        per = influences(t)
        object.__setattr__(self, "influence_per_bit", per)
        object.__setattr__(self, "influence", float(per.max()))

    @property
    def ones(self) -> int:
        """Count of inputs mapped to -1/2 (the Boolean value 1)."""
        return int(np.sum(self.table < 0))

    @property
    def balance_deviation(self) -> float:
        return abs(self.ones / self.table.size - 0.5)

    @classmethod
    def from_bool(cls, n_prime: int, values) -> "BooleanFunction":
        b = np.asarray(values, dtype=bool)
        return cls(n_prime, np.where(b, -0.5, 0.5))


@dataclass(frozen=True)
class BalancedFunction(BooleanFunction):
    def __post_init__(self):
        super().__post_init__()
        if self.table.sum() != 0:
            raise ValueError("function is not balanced")


def _input_bits(n: int) -> np.ndarray:
    x = np.arange(1 << n)
    return (x[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1


def dictator(n_prime: int, i: int = 0) -> BalancedFunction:
    return BalancedFunction.from_bool(n_prime, _input_bits(n_prime)[:, i])


def majority(n_prime: int, width: int | None = None) -> BalancedFunction:
    """Majority of the first ``width`` bits (largest odd width by default)."""
    if width is None:
        width = n_prime if n_prime % 2 else n_prime - 1
    if width % 2 == 0 or not 1 <= width <= n_prime:
        raise ValueError("majority needs an odd width within range")
    bits = _input_bits(n_prime)[:, :width]
    return BalancedFunction.from_bool(n_prime, bits.sum(axis=1) > width // 2)


def tribes_table(n_prime: int, block: int) -> np.ndarray:
    """OR over consecutive blocks of the AND within each block (last block may be short)."""
    bits = _input_bits(n_prime)
    out = np.zeros(1 << n_prime, dtype=bool)
    for start in range(0, n_prime, block):
        out |= bits[:, start:start + block].all(axis=1)
    return out


def tribes(n_prime: int, block: int | None = None) -> tuple[BooleanFunction, float]:
    """Tribes function and its deviation from balance.

    With no ``block`` given, the block size closest to balance wins (smallest
    on ties).
    """
    if n_prime < 4:
        raise ValueError("tribes needs n' >= 4")
    if block is None:
        best = None
        for w in range(1, n_prime + 1):
            dev = abs(tribes_table(n_prime, w).mean() - 0.5)
            if best is None or dev < best[0] - 1e-15:
                best = (dev, w)
        block = best[1]
    f = BooleanFunction.from_bool(n_prime, tribes_table(n_prime, block))
    return f, f.balance_deviation


# --- Search for balanced low-influence functions ---------------------------------

def _exhaustive_balanced(n_prime: int) -> BalancedFunction:
    size = 1 << n_prime
    combos = np.array(list(itertools.combinations(range(size), size // 2)), dtype=np.int64)
    tables = np.full((len(combos), size), 0.5)
    np.put_along_axis(tables, combos, -0.5, axis=1)
    per = np.stack([np.mean(np.abs(_pair_diffs(tables, i, n_prime)) ** 2, axis=1)
                    for i in range(n_prime)], axis=1)
    worst = per.max(axis=1)
    return BalancedFunction(n_prime, tables[int(np.argmin(worst))])


def _pair_diffs(tables, i, n):
    v = tables.reshape(len(tables), 1 << i, 2, 1 << (n - 1 - i))
    return (v[:, :, 0, :] - v[:, :, 1, :]).reshape(len(tables), -1)


def _local_search(table: np.ndarray, n: int, budget: int, rng) -> np.ndarray:
    """Swap one +1/2 entry with one -1/2 entry while (max, sum) of the
    disagreement counts does not increase."""
    t = table.copy()
    masks = 1 << (n - 1 - np.arange(n))
    idx = np.arange(t.size)
    # c[i] = number of ordered pairs (x, x^e_i) with different values
    c = np.array([int(np.sum(t != t[idx ^ m])) for m in masks])

    def flip(x):
        for b, m in enumerate(masks):
            c[b] += -2 if t[x] != t[x ^ m] else 2
        t[x] = -t[x]

    best = (c.max(), c.sum())
    for _ in range(budget):
        plus = np.flatnonzero(t > 0)
        minus = np.flatnonzero(t < 0)
        x = int(plus[rng.integers(plus.size)])
        y = int(minus[rng.integers(minus.size)])
        flip(x)
        flip(y)
        score = (c.max(), c.sum())
        if score <= best:
            best = score
        else:
            flip(y)
            flip(x)
    return t


def search_balanced_low_influence(n_prime: int, budget: int = 20000, seed=0) -> BalancedFunction:
    """Exactly balanced ``f`` with small ``max_i I_i(f)``.

    Exhaustive for ``n' <= 4``; otherwise swap-move local search from a
    majority start and from a random balanced start, keeping the better.
    """
    if n_prime < 1:
        raise ValueError("n' must be >= 1")
    if n_prime <= 4:
        return _exhaustive_balanced(n_prime)
    rng = as_rng(seed)
    size = 1 << n_prime
    starts = [majority(n_prime).table]
    rnd = np.full(size, 0.5)
    rnd[rng.permutation(size)[: size // 2]] = -0.5
    starts.append(rnd)
    best = None
    for s in starts:
        f = BalancedFunction(n_prime, _local_search(s, n_prime, budget, rng))
        if best is None or f.influence < best.influence:
            best = f
    return best


@lru_cache(maxsize=None)
def exhaustive_min_influence(n_prime: int) -> float:
    return _exhaustive_balanced(n_prime).influence


def sqrt_code_epsilon(n: int) -> tuple[int, int, float]:
    """``(B, n', 2 s(n'))`` for ``B = sqrt(n)`` and ``n' = n / (2B)``, with ``s``
    from exhaustive search."""
    B = math.isqrt(n)
    if B * B != n or n % (2 * B):
        raise ValueError("need n a perfect square with 2 sqrt(n) dividing n")
    n_prime = n // (2 * B)
    if n_prime > 4:
        raise ValueError("exhaustive influence only for n' <= 4")
    return B, n_prime, 2 * exhaustive_min_influence(n_prime)


# --- Product code -----------------------------------------------------------------

@dataclass(frozen=True)
class ProductCode:
    f: BalancedFunction
    B: int
    basis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.f, BalancedFunction):
            raise ValueError("the code needs an exactly balanced function")
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if self.n > 24:
            raise ValueError(f"n = {self.n} exceeds the dense-state cap")
        ones = np.ones(self.f.table.size)
        halves = (np.kron(self.f.table, ones), np.kron(ones, self.f.table))
        vecs = []
        for z in itertools.product((0, 1), repeat=self.B):
            v = np.ones(1)
            for zk in z:
                v = np.kron(v, halves[zk])
            vecs.append(v)
        object.__setattr__(self, "basis", np.stack(vecs))

    @property
    def n(self) -> int:
        return 2 * self.B * self.f.n_prime

    @property
    def dim(self) -> int:
        return 1 << self.B

    @property
    def norm_sq(self) -> float:
        """``<f_z|f_z> = 2^n 4^(-B)``."""
        return 2.0**self.n * 4.0 ** (-self.B)

    @property
    def epsilon(self) -> float:
        return 2 * self.f.influence

    def gram(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def codeword(self, coeffs) -> np.ndarray:
        c = np.asarray(coeffs)
        if c.shape != (self.dim,):
            raise ValueError(f"need {self.dim} coefficients")
        return c @ self.basis

    def random_codeword(self, seed=None) -> np.ndarray:
        rng = as_rng(seed)
        return self.codeword(rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim))

    def residual(self, phi) -> float:
        """Relative norm of the part of ``phi`` outside the code."""
        p = as_amplitudes(phi)
        c = (self.basis @ p) / self.norm_sq
        r = np.linalg.norm(p - c @ self.basis)
        return float(r / max(np.linalg.norm(p), 1e-300))

    def check_member(self, phi):
        r = self.residual(phi)
        if r > RESIDUAL_TOL:
            raise ValueError(f"state has relative residual {r:.3g} outside the code")


def build_code(f: BalancedFunction, B: int) -> ProductCode:
    return ProductCode(f, B)


# --- Immunity ----------------------------------------------------------------------

def immunity_margin(code: ProductCode, e: CbitError, phi) -> float:
    """``|<phi|E|phi>| / <phi|phi>``; the code guarantees at least ``1 - 2 s(n')``."""
    code.check_member(phi)
    p = as_amplitudes(phi)
    return float(abs(np.vdot(p, e.apply(p))) / np.vdot(p, p).real)


def singleton_margins(code: ProductCode, phi) -> np.ndarray:
    """Margins of every ``E_{i,{y}}``, shape ``(n, 2^(n-1))``."""
    code.check_member(phi)
    p = as_amplitudes(phi)
    norm = np.vdot(p, p).real
    return np.stack([np.abs(norm - np.abs(flip_differences(p, i)) ** 2) / norm
                     for i in range(code.n)])


def _subset_drops(code: ProductCode, phis, qubits, masks):
    # <phi|E_{i,S}|phi> - <phi|phi> = -sum_{y in S} |phi(y,0) - phi(y,1)|^2
    phis = np.atleast_2d(np.asarray(phis))
    for p in phis:
        code.check_member(p)
    masks = np.asarray(masks, dtype=bool)
    qubits = np.asarray(qubits)
    norms = np.einsum("ij,ij->i", phis.conj(), phis).real
    drop = np.empty((len(qubits), len(phis)))
    total = np.empty((len(qubits), len(phis)))
    for i in np.unique(qubits):
        rows = np.flatnonzero(qubits == i)
        d = np.abs(np.stack([flip_differences(p, int(i)) for p in phis])) ** 2
        drop[rows] = masks[rows].astype(float) @ d.T
        total[rows] = d.sum(axis=1)[None, :]
    return norms, drop, total


def subset_margins(code: ProductCode, phis, qubits, masks) -> np.ndarray:
    """Margins for errors ``E_{qubits[s], masks[s]}`` on every codeword: shape (subsets, codewords)."""
    norms, drop, _ = _subset_drops(code, phis, qubits, masks)
    return np.abs(norms[None, :] - drop) / norms[None, :]


def subset_chain(code: ProductCode, phis, qubits, masks) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Both links of the immunity chain for every (subset, codeword) pair.

    Returns ``|<phi|E|phi> - <phi|phi>|``, ``2^(n-1) I_i(phi)`` and
    ``2 s(n') <phi|phi>``, each of shape (subsets, codewords).
    """
    norms, drop, total = _subset_drops(code, phis, qubits, masks)
    return drop, total, np.broadcast_to(code.epsilon * norms[None, :], drop.shape)


@dataclass(frozen=True)
class ChainCheck:
    lhs: float
    rhs: float
    passed: bool


def flip_deviation_check(phi, i: int, S) -> ChainCheck:
    """``|<phi|E_{i,S}|phi> - <phi|phi>|`` against ``2^(n-1) I_i(phi)``, via direct application."""
    p = as_amplitudes(phi)
    n = _bits(p.size)
    e = CbitError(i, S)
    lhs = abs(np.vdot(p, e.apply(p)) - np.vdot(p, p))
    rhs = 2 ** (n - 1) * influence(p, i)
    return ChainCheck(float(lhs), float(rhs), bool(lhs <= rhs + 1e-9))


def adversarial_subset(phi, i: int) -> np.ndarray:
    """Reduced strings ``y`` whose term ``|phi(y,0) - phi(y,1)|^2`` is positive."""
    return np.flatnonzero(np.abs(flip_differences(as_amplitudes(phi), i)) > 0)


def code_influence_check(code: ProductCode, phi) -> ChainCheck:
    """``2^(n-1) I(phi)`` against ``2 s(n') <phi|phi>``."""
    code.check_member(phi)
    p = as_amplitudes(phi)
    lhs = 2 ** (code.n - 1) * max(influence(p, i) for i in range(code.n))
    rhs = code.epsilon * np.vdot(p, p).real
    return ChainCheck(float(lhs), float(rhs), bool(lhs <= rhs + 1e-9 * max(rhs, 1.0)))
