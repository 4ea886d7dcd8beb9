"""Pairwise error correlations and the lower bound on the weight tail.

Bit strings are integers read most significant bit first, so bit 0 is the
leftmost position. ``Pr(0^i 1 <= x)`` is the probability that the first
``i`` bits are 0 and bit ``i`` is 1.

With ``s = min_{i != j} Pr(x_j = 1 | x_i = 1)`` the bound is

    Pr(|x| > s n / 2) >= sum_{i<n} Pr(0^i 1 <= x) (s/2 - s i / n) / (1 - s/2).

Parametric distributions are mixtures of point masses and i.i.d. Bernoulli
products. Sampling runs in fixed chunks with per-chunk substreams and
reduces integer counts only, so results do not depend on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .seeding import as_rng, substream

EXPLICIT_MAX_N = 20
SAMPLE_CHUNK = 1 << 16


class UndefinedCorrelationError(ValueError):
    """Some bit is never 1, so a conditional correlation is undefined."""


@dataclass(frozen=True)
class Component:
    weight: float
    kind: str  # "point" or "iid"
    value: float  # the string (as int) for "point", the rate r for "iid"


@dataclass(frozen=True)
class ErrorStringDistribution:
    n: int
    probs: np.ndarray | None = None
    components: tuple[Component, ...] | None = None
    label: str = ""

    def __post_init__(self):
        if (self.probs is None) == (self.components is None):
            raise ValueError("give exactly one of probs or components")
        if self.probs is not None:
            p = np.asarray(self.probs, dtype=float)
            if p.shape != (1 << self.n,):
                raise ValueError("probs must have length 2^n")
            if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
                raise ValueError("probs must be nonnegative and sum to 1")
            object.__setattr__(self, "probs", p)
        else:
            w = sum(c.weight for c in self.components)
            if abs(w - 1) > 1e-12 or any(c.weight < 0 for c in self.components):
                raise ValueError("component weights must be nonnegative and sum to 1")
            for c in self.components:
                if c.kind == "point" and not 0 <= int(c.value) < 1 << self.n:
                    raise ValueError("point mass outside {0,1}^n")
                if c.kind == "iid" and not 0 <= c.value <= 1:
                    raise ValueError("iid rate must lie in [0, 1]")
                if c.kind not in ("point", "iid"):
                    raise ValueError(f"unknown component kind {c.kind!r}")

    # -- constructors
    @classmethod
    def twopoint(cls, n: int, p: float) -> "ErrorStringDistribution":
        """All ones with probability ``p``, all zeros otherwise."""
        return cls(n, components=(Component(p, "point", (1 << n) - 1), Component(1 - p, "point", 0)),
                   label=f"twopoint:{p}")

    @classmethod
    def iid(cls, n: int, r: float) -> "ErrorStringDistribution":
        return cls(n, components=(Component(1.0, "iid", r),), label=f"iid:{r}")

    @classmethod
    def mixture(cls, n: int, q: float, r: float) -> "ErrorStringDistribution":
        """``q`` on all ones plus ``1 - q`` on i.i.d. Bernoulli(r)."""
        return cls(n, components=(Component(q, "point", (1 << n) - 1), Component(1 - q, "iid", r)),
                   label=f"mixture:{q},{r}")

    @classmethod
    def random_explicit(cls, n: int, seed=None, alpha: float = 0.3) -> "ErrorStringDistribution":
        rng = as_rng(seed)
        return cls(n, probs=rng.dirichlet(np.full(1 << n, alpha)), label="dirichlet")

    # -- exact form
    def table(self) -> np.ndarray:
        if self.probs is not None:
            return self.probs
        if self.n > EXPLICIT_MAX_N:
            raise ValueError("too many bits to enumerate")
        w = _weights(self.n)
        p = np.zeros(1 << self.n)
        for c in self.components:
            if c.kind == "point":
                p[int(c.value)] += c.weight
            else:
                p += c.weight * c.value**w * (1 - c.value) ** (self.n - w)
        return p

    def explicit(self) -> "ErrorStringDistribution":
        return ErrorStringDistribution(self.n, probs=self.table(), label=self.label)

    # -- sampling
    def sample(self, trials: int, rng) -> np.ndarray:
        """Boolean array ``(trials, n)``; column 0 is the leftmost bit."""
        rng = as_rng(rng)
        if self.probs is not None:
            idx = rng.choice(1 << self.n, size=trials, p=self.probs)
            return _to_bits(idx, self.n)
        weights = np.array([c.weight for c in self.components])
        which = np.searchsorted(np.cumsum(weights), rng.random(trials) * weights.sum(), side="right")
        which = np.minimum(which, len(weights) - 1)
        out = np.zeros((trials, self.n), dtype=bool)
        for k, c in enumerate(self.components):
            rows = np.flatnonzero(which == k)
            if not rows.size:
                continue
            if c.kind == "point":
                out[rows] = _to_bits(np.array([int(c.value)]), self.n)[0]
            else:
                out[rows] = rng.random((rows.size, self.n)) < c.value
        return out


def _to_bits(idx: np.ndarray, n: int) -> np.ndarray:
    return ((np.asarray(idx)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1).astype(bool)


def _weights(n: int) -> np.ndarray:
    x = np.arange(1 << n)
    return _to_bits(x, n).sum(axis=1)


def _prefix_index(n: int) -> np.ndarray:
    """Position of the first 1 in each string; ``n`` for the all-zero string."""
    x = np.arange(1 << n)
    lengths = np.zeros(x.size, dtype=np.int64)
    lengths[1:] = np.floor(np.log2(x[1:])).astype(np.int64) + 1
    return n - lengths


# --- Exact quantities ---------------------------------------------------------

def correlation_matrix(d: ErrorStringDistribution) -> np.ndarray:
    """``c[i, j] = Pr(x_j = 1 | x_i = 1)``."""
    p = d.table()
    bits = _to_bits(np.arange(1 << d.n), d.n).astype(float)
    joint = (bits * p[:, None]).T @ bits
    single = np.diag(joint).copy()
    if np.any(single <= 0):
        raise UndefinedCorrelationError(f"bit {int(np.argmin(single))} is never 1")
    return joint / single[:, None]


def pairwise_correlation(d: ErrorStringDistribution, i: int, j: int) -> float:
    return float(correlation_matrix(d)[i, j])


def min_correlation(c: np.ndarray) -> float:
    off = ~np.eye(len(c), dtype=bool)
    return float(c[off].min())


def _rhs_weights(s: float, n: int) -> np.ndarray:
    i = np.arange(n)
    return (s / 2 - s * i / n) / (1 - s / 2)


@dataclass(frozen=True)
class TailCheck:
    s: float
    lhs: float
    rhs: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs


def prefix_probabilities(d: ErrorStringDistribution) -> np.ndarray:
    """``Pr(0^i 1 <= x)`` for ``i = 0 .. n-1``."""
    p = d.table()
    return np.bincount(_prefix_index(d.n), weights=p, minlength=d.n + 1)[: d.n]


def prefix_conditional_weight(d: ErrorStringDistribution) -> np.ndarray:
    """``E(|x| | 0^i 1 <= x)`` for ``i = 0 .. n-1`` (nan where the prefix has probability 0).

    The bound's derivation needs this to be at least ``(n - i) s``. Knowing
    the first ``i`` bits are 0 is extra information that ``c_ij`` does not
    control, so the requirement can fail for ``i >= 1``.
    """
    p = d.table()
    first = _prefix_index(d.n)
    mass = np.bincount(first, weights=p, minlength=d.n + 1)[: d.n]
    tot = np.bincount(first, weights=p * _weights(d.n), minlength=d.n + 1)[: d.n]
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(mass > 0, tot / np.where(mass > 0, mass, 1), np.nan)


def tail_bound_check(d: ErrorStringDistribution) -> TailCheck:
    s = min_correlation(correlation_matrix(d))
    if s >= 2:
        raise UndefinedCorrelationError("s must be below 2")
    p = d.table()
    lhs = float(p[_weights(d.n) > s * d.n / 2].sum())
    rhs = float(prefix_probabilities(d) @ _rhs_weights(s, d.n))
    return TailCheck(s, lhs, rhs, lhs >= rhs - 1e-12)


def polynomial_tail_terms(d: ErrorStringDistribution, count: int = 2) -> np.ndarray:
    """The leading ``count`` summands of the right-hand side."""
    s = min_correlation(correlation_matrix(d))
    count = min(count, d.n)
    return prefix_probabilities(d)[:count] * _rhs_weights(s, d.n)[:count]


# --- Sampled quantities ---------------------------------------------------------

@dataclass(frozen=True)
class _Counts:
    trials: int
    ones: np.ndarray  # per bit
    joint: np.ndarray  # pairwise
    prefix: np.ndarray  # first-one position, n + 1 bins
    weight: np.ndarray  # Hamming weight histogram, n + 1 bins


def _count_chunk(d: ErrorStringDistribution, trials: int, rng) -> _Counts:
    x = d.sample(trials, rng)
    xi = x.astype(np.int64)
    w = xi.sum(axis=1)
    first = np.where(x.any(axis=1), x.argmax(axis=1), d.n)
    return _Counts(trials, xi.sum(axis=0), xi.T @ xi,
                   np.bincount(first, minlength=d.n + 1), np.bincount(w, minlength=d.n + 1))


def sample_counts(d: ErrorStringDistribution, trials: int, seed: int, workers: int = 1) -> _Counts:
    n_chunks = -(-trials // SAMPLE_CHUNK)

    def run(c):
        return _count_chunk(d, min(SAMPLE_CHUNK, trials - c * SAMPLE_CHUNK), substream(seed, c))

    if workers <= 1:
        parts = [run(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(n_chunks)))
    return _Counts(
        trials,
        sum(p.ones for p in parts),
        sum(p.joint for p in parts),
        sum(p.prefix for p in parts),
        sum(p.weight for p in parts),
    )


@dataclass(frozen=True)
class SampledTail:
    s: float
    lhs: float
    rhs: float
    sigma_lhs: float
    sigma_rhs: float
    passed: bool

    @property
    def sigma(self) -> float:
        # conservative: the two sides come from the same samples
        return self.sigma_lhs + self.sigma_rhs


def tail_bound_sampled(d: ErrorStringDistribution, trials: int, seed: int,
                       workers: int = 1, s: float | None = None) -> SampledTail:
    """Frequencies of both sides of the bound.

    ``s`` defaults to the sample estimate, a minimum over noisy ratios and so
    biased low; pass the exact value when comparing against exact sides.
    """
    c = sample_counts(d, trials, seed, workers)
    if s is None:
        if np.any(c.ones == 0):
            raise UndefinedCorrelationError("some bit never came up 1 in the sample")
        s = min_correlation(c.joint / c.ones[:, None])
    n = d.n
    heavy = np.arange(n + 1) > s * n / 2
    lhs = c.weight[heavy].sum() / trials
    g = np.append(_rhs_weights(s, n), 0.0)  # the all-zero string contributes nothing
    rhs = float(c.prefix @ g) / trials
    var_r = max(float(c.prefix @ g**2) / trials - rhs**2, 0.0)
    sig_l = float(np.sqrt(lhs * (1 - lhs) / trials))
    sig_r = float(np.sqrt(var_r / trials))
    return SampledTail(float(s), float(lhs), rhs, sig_l, sig_r, bool(lhs >= rhs - 3 * (sig_l + sig_r)))


def pairwise_correlation_sampled(d: ErrorStringDistribution, i: int, j: int, trials: int,
                                 seed: int) -> tuple[float, float]:
    c = sample_counts(d, trials, seed)
    if c.ones[i] == 0:
        raise UndefinedCorrelationError(f"bit {i} never came up 1 in the sample")
    est = c.joint[i, j] / c.ones[i]
    return float(est), float(np.sqrt(est * (1 - est) / c.ones[i]))


def parse_distribution(spec: str, n: int) -> ErrorStringDistribution:
    """``mixture:q,r`` | ``twopoint:p`` | ``iid:r``."""
    kind, _, args = spec.partition(":")
    try:
        vals = [float(v) for v in args.split(",")] if args else []
    except ValueError as exc:
        raise ValueError(f"bad distribution parameters in {spec!r}") from exc
    if kind == "mixture" and len(vals) == 2:
        return ErrorStringDistribution.mixture(n, *vals)
    if kind == "twopoint" and len(vals) == 1:
        return ErrorStringDistribution.twopoint(n, vals[0])
    if kind == "iid" and len(vals) == 1:
        return ErrorStringDistribution.iid(n, vals[0])
    raise ValueError(f"unrecognized distribution {spec!r}")
