"""Repetition-code baseline and the concatenation threshold machinery.

Covers the classical 3-bit repetition code, the doubly-exponential
badness bound for k-level extended rectangles, a Monte Carlo of the
independent-fault rectangle model behind it, and the level needed to
reach a target computation error.

Monte Carlo runs are split into fixed-size chunks; chunk ``c`` draws from
``substream(seed, *stream, c)``, so the estimate depends only on the seed,
never on the worker count or scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .seeding import substream

MC_CHUNK = 1 << 15


class AboveThresholdError(ValueError):
    """The noise rate is at or above threshold; no concatenation level suffices."""


# --- Classical repetition code --------------------------------------------

def majority_decode(bits) -> int:
    bits = [int(b) for b in bits]
    if len(bits) != 3 or any(b not in (0, 1) for b in bits):
        raise ValueError("majority_decode takes exactly three bits")
    return int(sum(bits) >= 2)


def repetition_failure(p: float) -> float:
    """Probability that at least two of three independently flipped bits flip."""
    _check_prob(p, "p")
    return 3 * (1 - p) * p**2 + p**3


def concatenated_repetition_failure(p: float, levels: int) -> float:
    if levels < 1:
        raise ValueError("levels must be >= 1")
    for _ in range(levels):
        p = repetition_failure(p)
    return p


def _check_prob(p, name):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")


# --- Rectangle badness -----------------------------------------------------

@dataclass(frozen=True)
class ConcatParams:
    """Inputs to the independent-noise threshold formulas.

    ``A`` counts pairs of locations in a 1-exRec; when the rectangle size
    ``m`` is given, ``A`` must equal ``m(m-1)/2`` (pass ``A=None`` to derive it).
    """

    A: int | None
    eps: float
    L: int = 1
    delta: float = 1.0
    k: int = 1
    m: int | None = None

    def __post_init__(self):
        if self.m is not None:
            if self.m < 2:
                raise ValueError("m must be >= 2")
            pairs = self.m * (self.m - 1) // 2
            if self.A is None:
                object.__setattr__(self, "A", pairs)
            elif self.A != pairs:
                raise ValueError(f"A={self.A} but m={self.m} gives {pairs} pairs")
        if self.A is None or self.A < 1:
            raise ValueError("A must be a positive integer")
        _check_prob(self.eps, "eps")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.k < 0:
            raise ValueError("k must be >= 0")


def _raw_badness(A: int, eps: float, k: int) -> float:
    return (A * eps) ** (2**k) / A


def badness_bound(params: ConcatParams) -> float:
    """``min(1, (A eps)^(2^k) / A)`` for the probability that a k-exRec is bad."""
    if params.k < 1:
        raise ValueError("badness_bound needs k >= 1")
    try:
        return min(1.0, _raw_badness(params.A, params.eps, params.k))
    except OverflowError:
        return 1.0


def exact_badness(m: int, eps: float, k: int) -> float:
    """Exact badness under the non-overlapping model: ``p_j = P[Bin(m, p_{j-1}) >= 2]``."""
    p = eps
    for _ in range(k):
        # upper tail summed term by term; 1 - P0 - P1 cancels badly for small p
        p = sum(math.comb(m, j) * p**j * (1.0 - p) ** (m - j) for j in range(2, m + 1))
    return p


@dataclass(frozen=True)
class BadnessEstimate:
    m: int
    eps: float
    k: int
    trials: int
    bad: int

    @property
    def estimate(self) -> float:
        return self.bad / self.trials

    @property
    def std_err(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1 - p) / self.trials)


def _bad_count(m: int, eps: float, k: int, n: int, rng: np.random.Generator) -> int:
    bad = rng.random((n, m**k)) < eps
    for _ in range(k):
        bad = bad.reshape(n, -1, m).sum(axis=2) >= 2
    return int(bad.sum())


def simulate_badness(m: int, eps: float, k: int, trials: int, seed: int,
                     workers: int = 1, stream: tuple[int, ...] = ()) -> BadnessEstimate:
    """Monte Carlo frequency of bad k-exRecs.

    A level-1 rectangle is ``m`` independent Bernoulli(eps) locations and is
    bad with at least two faults; a level-k rectangle is ``m`` independent
    level-(k-1) rectangles and is bad with at least two bad ones.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if k < 1 or m < 2:
        raise ValueError("need k >= 1 and m >= 2")
    _check_prob(eps, "eps")
    n_chunks = -(-trials // MC_CHUNK)

    def run(c):
        n = min(MC_CHUNK, trials - c * MC_CHUNK)
        return _bad_count(m, eps, k, n, substream(seed, *stream, c))

    if workers <= 1:
        counts = [run(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(run, range(n_chunks)))
    return BadnessEstimate(m, eps, k, trials, sum(counts))


def loglog_slope(A: int, probs: dict[int, float]) -> float:
    """Least-squares slope of ``log(-log(A p_k))`` against ``k``.

    Doubly-exponential suppression ``A p_k = (A eps)^(2^k)`` gives slope log 2.
    """
    ks, ys = [], []
    for k, p in sorted(probs.items()):
        if not 0 < A * p < 1:
            raise ValueError(f"A*p must lie in (0, 1) for k={k}, got {A * p!r}")
        ks.append(k)
        ys.append(math.log(-math.log(A * p)))
    if len(ks) < 2:
        raise ValueError("need at least two levels to fit a slope")
    return float(np.polyfit(ks, ys, 1)[0])


# --- Level selection -------------------------------------------------------

def required_level(params: ConcatParams) -> int:
    """Smallest k with ``2^k >= log(2L / (delta A)) / log(1 / (eps A))``.

    ``k = 0`` when the right-hand side is at most 1, and whenever
    ``delta >= 2`` (no two distributions are further apart than 2).
    """
    A, eps, L, delta = params.A, params.eps, params.L, params.delta
    if eps * A >= 1.0:
        raise AboveThresholdError(f"eps*A = {eps * A:.6g} >= 1: above threshold")
    if delta >= 2.0:
        return 0
    if eps == 0.0:
        return 0
    ratio = math.log(2 * L / (delta * A)) / math.log(1 / (eps * A))
    return _min_level(ratio)


def _min_level(ratio: float) -> int:
    if ratio <= 1.0:
        return 0
    k = max(0, math.ceil(math.log2(ratio)))
    # guard the float log2 against off-by-one at exact powers of two
    while k > 0 and 2 ** (k - 1) >= ratio:
        k -= 1
    while 2**k < ratio:
        k += 1
    return k


@dataclass(frozen=True)
class FailureBound:
    p_fail: float
    delta: float
    p_fail_raw: float
    delta_raw: float


def failure_prob_bound(params: ConcatParams) -> FailureBound:
    """Union bound ``P_fail <= L eps^(k)`` and ``delta <= 2 P_fail``."""
    if params.k < 1:
        raise ValueError("failure_prob_bound needs k >= 1")
    try:
        raw = params.L * _raw_badness(params.A, params.eps, params.k)
    except OverflowError:
        raw = math.inf
    return FailureBound(min(1.0, raw), min(2.0, 2 * raw), raw, 2 * raw)


# --- Sweeps ---------------------------------------------------------------

def threshold_sweep(ms, eps_grid, k_max: int, trials: int, seed: int, workers: int = 1) -> list[dict]:
    """One row per (m, eps, k) cell: Monte Carlo badness next to the bound."""
    rows = []
    cell = 0
    for m in ms:
        A = m * (m - 1) // 2
        for eps in eps_grid:
            for k in range(1, k_max + 1):
                est = simulate_badness(m, eps, k, trials, seed, workers=workers, stream=(cell,))
                rows.append({
                    "m": m,
                    "A": A,
                    "eps": eps,
                    "k": k,
                    "mc_estimate": est.estimate,
                    "std_err": est.std_err,
                    "closed_form_bound": badness_bound(ConcatParams(A, eps, k=k)),
                })
                cell += 1
    return rows
