"""Number-theoretic support routines.

Divisor counts (pointwise and sieved), the constructive constant c with
delta(n) <= c * n^epsilon for the ordered-divisor count delta, zeta on
(1, infinity) to 1e-12, and the exhaustive composition power sum with its
closed-form bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import isqrt

import numpy as np

from . import _kernels
from .errors import DomainError, ResourceError

__all__ = [
    "Factorization",
    "factorize",
    "divisor_count",
    "divisor_counts_upto",
    "divisor_bound_scan",
    "ConstructiveDivisorBound",
    "constructive_c_epsilon",
    "zeta",
    "zeta_direct_bounds",
    "CompositionQuery",
    "CompositionResult",
    "composition_sum",
]

LOG2 = math.log(2.0)

#: composition_sum refuses queries with more compositions than this
DEFAULT_COMPOSITION_CAP = 10_000_000

#: constructive_c_epsilon refuses prime searches beyond this bound
_PRIME_SEARCH_CAP = 20_000_000


@dataclass(frozen=True)
class Factorization:
    """Prime factorization as (prime, exponent) pairs, primes increasing."""

    factors: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        last = 1
        for p, e in self.factors:
            if p <= last or e < 1:
                raise DomainError("factors must have strictly increasing primes and exponents >= 1")
            last = p

    @property
    def n(self) -> int:
        out = 1
        for p, e in self.factors:
            out *= p ** e
        return out

    @property
    def divisor_count(self) -> int:
        out = 1
        for _, e in self.factors:
            out *= e + 1
        return out


def factorize(n: int) -> Factorization:
    if n < 1:
        raise DomainError("factorize requires n >= 1")
    factors = []
    rem = n
    for p in (2, 3):
        if rem % p == 0:
            e = 0
            while rem % p == 0:
                rem //= p
                e += 1
            factors.append((p, e))
    p = 5
    while p * p <= rem:
        for cand in (p, p + 2):
            if rem % cand == 0:
                e = 0
                while rem % cand == 0:
                    rem //= cand
                    e += 1
                factors.append((cand, e))
        p += 6
    if rem > 1:
        factors.append((rem, 1))
    return Factorization(tuple(factors))


def divisor_count(n: int) -> int:
    """Number of ordered pairs (a, b) with ab = n; equals the divisor count."""
    if n < 1:
        raise DomainError("divisor_count requires n >= 1")
    return factorize(n).divisor_count


def divisor_counts_upto(limit: int) -> np.ndarray:
    """Sieved divisor counts for 1..limit (entry 0 is unused)."""
    return _kernels.divisor_sieve(limit)


def divisor_bound_scan(epsilon: float, limit: int) -> tuple[float, int]:
    """Exhaustive max of delta(n)/n^epsilon over n <= limit, with its argmax."""
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    if limit < 1:
        raise DomainError("limit must be >= 1")
    counts = divisor_counts_upto(limit)[1:].astype(np.float64)
    ratios = counts / np.arange(1, limit + 1, dtype=np.float64) ** epsilon
    idx = int(np.argmax(ratios))
    return float(ratios[idx]), idx + 1


@dataclass(frozen=True)
class ConstructiveDivisorBound:
    epsilon: float
    M: int
    l0: int
    c: int


def _prime_count_and_next(threshold: float) -> tuple[int, int]:
    """(index of the first prime >= threshold, that prime)."""
    t = max(2, int(math.ceil(threshold)))
    # a window past the threshold certainly containing a prime (Bertrand)
    window = 2 * t + 10
    sieve = np.ones(window + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, isqrt(window) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    primes = np.flatnonzero(sieve)
    pos = int(np.searchsorted(primes, t))
    p = int(primes[pos])
    return pos + 1, p


def constructive_c_epsilon(epsilon: float) -> ConstructiveDivisorBound:
    """The explicit constant c = 2^(M*l0) with delta(n) <= c*n^epsilon always.

    M counts primes up to the first one whose epsilon power reaches 2;
    every exponent run l from l0 on satisfies 2^(epsilon*l) >= l + 1, and
    l0 is minimal with that property for all larger l (the left side is
    eventually increasing faster, so scanning to the first success past
    the turning point suffices).
    """
    if not 0 < epsilon <= 1:
        raise DomainError("epsilon must lie in (0, 1]")
    threshold = 2.0 ** (1.0 / epsilon)
    if threshold > _PRIME_SEARCH_CAP:
        raise ResourceError(
            f"epsilon {epsilon:g} needs a prime search past {threshold:.3g}; "
            f"the cap is {_PRIME_SEARCH_CAP:g}"
        )
    M, _ = _prime_count_and_next(threshold)

    # f(l) = epsilon*l*log2 - log(l+1) is increasing once l+1 > 1/(epsilon log 2)
    turn = math.ceil(1.0 / (epsilon * LOG2))
    l = 1
    last_fail = 0
    while True:
        ok = epsilon * l * LOG2 >= math.log(l + 1) - 1e-12
        if not ok:
            last_fail = l
        if ok and l >= turn:
            break
        l += 1
    l0 = last_fail + 1
    return ConstructiveDivisorBound(epsilon, M, l0, 1 << (M * l0))


_BERNOULLI_TERMS = (
    # (k, B_2k / (2k)!) for the Euler-Maclaurin correction
    (1, 1.0 / 12.0),
    (2, -1.0 / 720.0),
    (3, 1.0 / 30240.0),
)


def zeta(r: float) -> float:
    """Riemann zeta on (1, inf) to absolute accuracy 1e-12."""
    if r <= 1:
        raise DomainError("zeta is evaluated only for r > 1")
    N = 64
    s = math.fsum(n ** (-r) for n in range(1, N + 1))
    s += N ** (1.0 - r) / (r - 1.0)
    s -= 0.5 * N ** (-r)
    # ascending factorials r(r+1)...(r+2k-2)
    rising = r
    power = N ** (-r - 1.0)
    for k, coeff in _BERNOULLI_TERMS:
        s += coeff * rising * power
        rising *= (r + 2 * k - 1) * (r + 2 * k)
        power /= N * N
    return s


def zeta_direct_bounds(r: float, terms: int = 100_000) -> tuple[float, float]:
    """Rigorous enclosure of zeta(r) by direct summation plus integral tails."""
    if r <= 1:
        raise DomainError("zeta is evaluated only for r > 1")
    n = np.arange(1, terms + 1, dtype=np.float64)
    partial = math.fsum(np.power(n, -r).tolist())
    lo = partial + (terms + 1) ** (1.0 - r) / (r - 1.0)
    hi = partial + terms ** (1.0 - r) / (r - 1.0)
    return lo, hi


@dataclass(frozen=True)
class CompositionQuery:
    """Ordered compositions of m into n positive parts, weighted by part^(-2s)."""

    n: int
    m: int
    s: float

    def __post_init__(self) -> None:
        if not 1 <= self.n <= self.m:
            raise DomainError("need 1 <= n <= m")
        if not 0.5 < self.s < 1.0:
            raise DomainError("s must lie in (1/2, 1)")

    @property
    def count(self) -> int:
        return math.comb(self.m - 1, self.n - 1)


@dataclass(frozen=True)
class CompositionResult:
    query: CompositionQuery
    total: float
    bound: float
    holds: bool
    count: int


def composition_sum(query: CompositionQuery, cap: int = DEFAULT_COMPOSITION_CAP) -> CompositionResult:
    """Exhaustive composition power sum against the bound (4.5(2+zeta(2s)))^n m^(-2s)."""
    count = query.count
    if count > cap:
        raise ResourceError(f"{count} compositions exceed the cap {cap}")
    total = _kernels.composition_power_sum(query.n, query.m, 2.0 * query.s)
    bound = (4.5 * (2.0 + zeta(2.0 * query.s))) ** query.n * query.m ** (-2.0 * query.s)
    holds = total <= bound * (1.0 + 1e-12)
    return CompositionResult(query, total, bound, holds, count)
