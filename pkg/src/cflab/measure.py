"""Exact interval measures for the two reference laws.

An IntervalUnion is a finite disjoint union of rational-endpoint
subintervals of [0, 1].  Measures come back as MeasureValue pairs (value,
error_bound): the error bound covers only floating rounding for closed
forms, and carries a rigorous truncation term for the finite-depth mixing
ratio.

The invariant density is 1/((1+x) log 2); a component [a, b] contributes
log1p((b-a)/(1+a))/log 2, evaluated from the exact rational difference so
that near-cancellation never costs accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as _iterproduct
from typing import Iterable, Sequence, Union

from . import _kernels
from .cf_core import DigitSequence, _convergent_frame
from .errors import DomainError, ResourceError

__all__ = [
    "Interval",
    "IntervalUnion",
    "MeasureValue",
    "lebesgue",
    "gauss",
    "product_set",
    "asymptotic_product_measure",
    "truncated_pair_expectation",
    "pair_cylinder_measure",
    "correlation_ratio",
]

LOG2 = math.log(2.0)
_EPS = 2.220446049250313e-16

#: truncated_pair_expectation refuses sums with more terms than this
DEFAULT_TERM_CAP = 500_000_000

#: correlation_ratio refuses preimage enumerations larger than this
DEFAULT_WORD_CAP = 2_000_000

RationalLike = Union[int, Fraction]


class _Neumaier:
    """Compensated accumulator; exact to one rounding of the final total."""

    __slots__ = ("total", "comp", "gross")

    def __init__(self) -> None:
        self.total = 0.0
        self.comp = 0.0
        self.gross = 0.0

    def add(self, x: float) -> None:
        self.gross += abs(x)
        s = self.total + x
        if abs(self.total) >= abs(x):
            self.comp += (self.total - s) + x
        else:
            self.comp += (x - s) + self.total
        self.total = s

    @property
    def value(self) -> float:
        return self.total + self.comp


@dataclass(frozen=True)
class Interval:
    """One rational-endpoint subinterval of [0, 1] with inclusion flags."""

    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self) -> None:
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo < 0 or hi > 1:
            raise DomainError("interval endpoints must lie in [0, 1]")
        if lo > hi:
            raise DomainError("interval endpoints out of order")
        if lo == hi and not (self.lo_closed and self.hi_closed):
            raise DomainError("degenerate interval must be a closed point")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo


class IntervalUnion:
    """Disjoint intervals sorted by left endpoint."""

    __slots__ = ("components",)

    def __init__(self, components: Iterable[Interval], merge_adjacent: bool = False):
        comps = sorted(components, key=lambda iv: (iv.lo, iv.hi))
        if merge_adjacent:
            merged: list[Interval] = []
            for iv in comps:
                if merged:
                    prev = merged[-1]
                    if prev.hi == iv.lo and (prev.hi_closed or iv.lo_closed):
                        merged[-1] = Interval(prev.lo, iv.hi, prev.lo_closed, iv.hi_closed)
                        continue
                merged.append(iv)
            comps = merged
        for a, b in zip(comps, comps[1:]):
            if b.lo < a.hi or (b.lo == a.hi and a.hi_closed and b.lo_closed):
                raise DomainError("interval components overlap")
        self.components = tuple(comps)

    @classmethod
    def single(cls, lo: RationalLike, hi: RationalLike, lo_closed: bool = True, hi_closed: bool = True) -> "IntervalUnion":
        return cls((Interval(Fraction(lo), Fraction(hi), lo_closed, hi_closed),))

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        """Disjoint union; overlapping inputs raise."""
        return IntervalUnion(self.components + other.components)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __repr__(self) -> str:
        return f"IntervalUnion({len(self.components)} components)"


@dataclass(frozen=True)
class MeasureValue:
    """A computed measure (or measure ratio) with an error bound.

    Plain measures land in [0, 1]; the mixing ratio reuses the type and may
    legitimately exceed 1, so the range is enforced by the producers, not
    here.
    """

    value: float
    error_bound: float = 0.0

    def __post_init__(self) -> None:
        if self.error_bound < 0:
            raise DomainError("error bound must be >= 0")


def lebesgue(u: IntervalUnion) -> MeasureValue:
    acc = _Neumaier()
    for iv in u.components:
        acc.add(float(iv.length))
    return MeasureValue(min(acc.value, 1.0), 2.0 * _EPS * (acc.gross + 1.0))


def _gauss_term(lo: Fraction, hi: Fraction) -> float:
    # log((1+hi)/(1+lo)) without cancellation: the argument of log1p is the
    # exact rational (hi-lo)/(1+lo), correctly rounded once
    return math.log1p(float((hi - lo) / (1 + lo))) / LOG2


def gauss(u: IntervalUnion) -> MeasureValue:
    acc = _Neumaier()
    for iv in u.components:
        acc.add(_gauss_term(iv.lo, iv.hi))
    return MeasureValue(min(acc.value, 1.0), 5.0 * _EPS * (acc.gross + 1.0))


def product_set(t) -> IntervalUnion:
    """The exact set of x whose first two digits multiply to at least t.

    Decomposes by the first digit a: the set is (0, 1/(T+1)) joined with,
    for each a <= T, the x with a_1 = a and a_2 >= ceil(t/a), which is
    [1/(a + 1/ceil(t/a)), 1/a).  T = floor(t).  Touching pieces (they
    arise when t is an integer) are merged.
    """
    t = Fraction(t)
    if t < 1:
        raise DomainError("product_set requires t >= 1")
    T = math.floor(t)
    comps = [Interval(Fraction(0), Fraction(1, T + 1), False, False)]
    for a in range(T, 0, -1):
        m = math.ceil(t / a)
        left = Fraction(m, a * m + 1)
        right = Fraction(1, a)
        comps.append(Interval(left, right, True, False))
    return IntervalUnion(comps, merge_adjacent=True)


def asymptotic_product_measure(t: float) -> float:
    """Leading term log(t)/(t log 2) of the invariant measure of the set above."""
    if t <= 1:
        raise DomainError("asymptotic form requires t > 1")
    return math.log(t) / (t * LOG2)


def estimated_pair_terms(threshold: float) -> float:
    """Approximate count of (i, j) pairs with i*j <= threshold."""
    T = math.floor(threshold)
    if T < 1:
        return 0.0
    return T * (math.log(T) + 1.2) + 10.0


def truncated_pair_expectation(threshold: float, term_cap: int = DEFAULT_TERM_CAP) -> float:
    """Expectation of the digit pair product truncated at threshold.

    Sums i*j*mu(I(i, j)) over all pairs with i*j <= threshold, compensated,
    in closed form per pair.  Raises ResourceError when the pair count
    would exceed term_cap; callers then fall back to the asymptotic
    log^2(threshold)/(2 log 2).
    """
    if threshold < 1:
        raise DomainError("threshold must be >= 1")
    if estimated_pair_terms(threshold) > term_cap:
        raise ResourceError(
            f"pair sum at threshold {threshold:g} needs about "
            f"{estimated_pair_terms(threshold):.3g} terms, over the cap {term_cap:g}"
        )
    return _kernels.pair_expectation_sum(threshold)


def pair_cylinder_measure(i: int, j: int) -> MeasureValue:
    """Invariant measure of the rank-2 cylinder I(i, j), in closed form.

    The endpoint cross ratio works out to 1 + 1/((ij+i+1)(ij+j+1)).
    """
    if i < 1 or j < 1:
        raise DomainError("digits must be >= 1")
    den = (i * j + i + 1) * (i * j + j + 1)
    v = math.log1p(1.0 / den) / LOG2
    return MeasureValue(v, 4.0 * _EPS * v)


def _cylinder_bounds(frame: tuple[int, int, int, int]) -> tuple[Fraction, Fraction]:
    p, q, p_prev, q_prev = frame
    a = Fraction(p, q)
    b = Fraction(p + p_prev, q + q_prev)
    return (a, b) if a <= b else (b, a)


def correlation_ratio(
    prefix: Union[DigitSequence, Sequence[int]],
    B: IntervalUnion,
    gap: int,
    depth: int,
    word_cap: int = DEFAULT_WORD_CAP,
) -> MeasureValue:
    """Finite-truncation mixing ratio mu(I(prefix) & T^-(m+gap) B)/(mu(I(prefix)) mu(B)).

    The preimage inside I(prefix) decomposes over the digits filling the
    gap.  Words with all digits <= depth are enumerated and their branch
    maps applied to B exactly; the discarded tail (some digit > depth) is
    bracketed by 0 and its full cylinder mass, which yields the reported
    rigorous error_bound.  The value uses the midpoint convention of
    weighting the tail by mu(B).
    """
    seq = DigitSequence.coerce(prefix)
    if gap < 0:
        raise DomainError("gap must be >= 0")
    if depth < 1:
        raise DomainError("depth must be >= 1")
    if gap > 0 and depth ** gap > word_cap:
        raise ResourceError(f"{depth}^{gap} preimage words exceed the cap {word_cap}")
    mu_B = gauss(B).value
    if mu_B <= 0.0:
        raise DomainError("B must have positive measure")
    if len(seq) == 0:
        mu_I = 1.0
    else:
        mu_I = gauss(IntervalUnion.single(*_cylinder_bounds(_convergent_frame(seq.digits)))).value

    num = _Neumaier()       # measure of the enumerated part of the intersection
    covered = _Neumaier()   # total cylinder mass of the enumerated words
    for word in _iterproduct(range(1, depth + 1), repeat=gap):
        full = seq.digits + word
        p, q, p_prev, q_prev = _convergent_frame(full)
        c_lo, c_hi = _cylinder_bounds((p, q, p_prev, q_prev))
        covered.add(_gauss_term(c_lo, c_hi))
        for iv in B.components:
            x1 = Fraction(p + p_prev * iv.lo, q + q_prev * iv.lo)
            x2 = Fraction(p + p_prev * iv.hi, q + q_prev * iv.hi)
            if x1 > x2:
                x1, x2 = x2, x1
            num.add(_gauss_term(x1, x2))

    disc = max(mu_I - covered.value, 0.0)
    denom = mu_I * mu_B
    ratio = (num.value + disc * mu_B) / denom
    err = disc * max(mu_B, 1.0 - mu_B) / denom + 16.0 * _EPS * (1.0 + abs(ratio))
    return MeasureValue(ratio, err)
