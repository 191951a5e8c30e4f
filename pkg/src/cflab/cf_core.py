"""Exact continued-fraction machinery.

Finite digit sequences, convergents, cylinder intervals with exact rational
endpoints, and lazily generated digit streams of random reals drawn from
either the uniform or the invariant density 1/((1+x) log 2).

Everything here is exact: endpoints are Fractions, digit streams never
round.  Conventions for x in (0, 1):

* digits are positive integers a_1, a_2, ...
* p_k/q_k follows q_k = a_k q_{k-1} + q_{k-2} with q_{-1} = 0, q_0 = 1
  (and p_{-1} = 1, p_0 = 0)
* the cylinder of (a_1..a_n) has endpoints p_n/q_n and the mediant
  (p_n + p_{n-1})/(q_n + q_{n-1}); the convergent is the closed end, on the
  right when n is odd and on the left when n is even
* canonical finite expansions end in a digit >= 2 (single-digit sequences
  excepted), which makes rational round trips unique
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Iterator, Sequence, Union, overload

from ._engine import DEFAULT_BIT_BUDGET, LAWS, EngineState, next_digit as _engine_next_digit, tail_interval
from .errors import DomainError

__all__ = [
    "DigitSequence",
    "Convergent",
    "CylinderInterval",
    "RandomRealStream",
    "expand_rational",
    "convergents",
    "value",
    "cylinder",
    "digit_stream",
    "next_digit",
    "shift",
]


@dataclass(frozen=True)
class DigitSequence:
    """A finite sequence of partial quotients, each >= 1."""

    digits: tuple[int, ...]

    def __post_init__(self) -> None:
        for a in self.digits:
            if not isinstance(a, int) or isinstance(a, bool) or a < 1:
                raise DomainError(f"partial quotients must be integers >= 1, got {a!r}")

    @classmethod
    def coerce(cls, obj: Union["DigitSequence", Iterable[int]]) -> "DigitSequence":
        if isinstance(obj, DigitSequence):
            return obj
        return cls(tuple(int(a) for a in obj))

    @property
    def is_canonical(self) -> bool:
        return len(self.digits) < 2 or self.digits[-1] >= 2

    def __len__(self) -> int:
        return len(self.digits)

    def __iter__(self) -> Iterator[int]:
        return iter(self.digits)

    @overload
    def __getitem__(self, idx: int) -> int: ...

    @overload
    def __getitem__(self, idx: slice) -> "DigitSequence": ...

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return DigitSequence(self.digits[idx])
        return self.digits[idx]

    def __repr__(self) -> str:
        return f"DigitSequence({list(self.digits)!r})"


@dataclass(frozen=True)
class Convergent:
    """One rational approximant p/q, stored in lowest terms."""

    p: int
    q: int

    def __post_init__(self) -> None:
        if self.q < 1:
            raise DomainError("convergent denominator must be >= 1")
        if gcd(self.p, self.q) != 1:
            raise DomainError("convergent must be in lowest terms")

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


@dataclass(frozen=True)
class CylinderInterval:
    """The exact interval of reals sharing a given digit prefix.

    lo_closed/hi_closed record which endpoint belongs to the set; parity is
    len(digits) mod 2 and determines which side the convergent endpoint sits
    on (odd: right, even: left).
    """

    digits: DigitSequence
    lo: Fraction
    hi: Fraction
    lo_closed: bool
    hi_closed: bool
    parity: int

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x: Union[Fraction, int]) -> bool:
        x = Fraction(x)
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo:
            return self.lo_closed
        if x == self.hi:
            return self.hi_closed
        return True


def _convergent_frame(digits: Sequence[int]) -> tuple[int, int, int, int]:
    # returns (p_n, q_n, p_{n-1}, q_{n-1})
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    for a in digits:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
    return p, q, p_prev, q_prev


def convergents(digits: Union[DigitSequence, Iterable[int]]) -> tuple[Convergent, ...]:
    """All convergents p_k/q_k for k = 1..n."""
    seq = DigitSequence.coerce(digits)
    if len(seq) == 0:
        raise DomainError("convergents of an empty digit sequence are undefined")
    out = []
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    for a in seq:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        out.append(Convergent(p, q))
    return tuple(out)


def value(digits: Union[DigitSequence, Iterable[int]]) -> Fraction:
    """Exact rational value of a finite expansion."""
    seq = DigitSequence.coerce(digits)
    if len(seq) == 0:
        raise DomainError("value of an empty digit sequence is undefined")
    p, q, _, _ = _convergent_frame(seq.digits)
    return Fraction(p, q)


def expand_rational(numerator: int, denominator: int, max_digits: int | None = None) -> DigitSequence:
    """Canonical expansion of numerator/denominator in (0, 1).

    The floor recursion x -> 1/x - floor(1/x) on a rational is the
    Euclidean algorithm on (denominator, numerator); it terminates and its
    last quotient is automatically >= 2, so no trailing-1 cleanup is
    needed.  With max_digits set, the sequence is cut after that many
    digits (a truncated prefix may legitimately end in 1).
    """
    if denominator == 0:
        raise DomainError("denominator must be nonzero")
    if denominator < 0:
        numerator, denominator = -numerator, -denominator
    if not 0 < numerator < denominator:
        raise DomainError("expand_rational requires a value strictly between 0 and 1")
    if max_digits is not None and max_digits < 1:
        raise DomainError("max_digits must be >= 1")
    g = gcd(numerator, denominator)
    num, den = numerator // g, denominator // g
    digits: list[int] = []
    while num != 0:
        a, rem = divmod(den, num)
        digits.append(a)
        den, num = num, rem
        if max_digits is not None and len(digits) >= max_digits:
            break
    return DigitSequence(tuple(digits))


def cylinder(digits: Union[DigitSequence, Iterable[int]]) -> CylinderInterval:
    """Exact cylinder interval for a digit prefix."""
    seq = DigitSequence.coerce(digits)
    n = len(seq)
    if n == 0:
        raise DomainError("cylinder of an empty digit sequence is undefined")
    p, q, p_prev, q_prev = _convergent_frame(seq.digits)
    conv = Fraction(p, q)
    mediant = Fraction(p + p_prev, q + q_prev)
    if n % 2 == 1:
        # convergent is the right endpoint and belongs to the set
        return CylinderInterval(seq, mediant, conv, False, True, 1)
    return CylinderInterval(seq, conv, mediant, True, False, 0)


class RandomRealStream:
    """Digit stream of one random real, drawn from a seeded bit source.

    (seed, law) determines the real and hence every digit.  The stream owns
    mutable transducer state; hand it between threads if you like, never
    share it.  Digits emitted so far are kept so that real_interval() can
    reconstruct an exact rational enclosure of the underlying real at any
    point.
    """

    __slots__ = ("seed", "law", "_engine", "_digits", "bit_budget")

    def __init__(self, seed: int, law: str = "lebesgue", bit_budget: int = DEFAULT_BIT_BUDGET):
        if law not in LAWS:
            raise DomainError(f"law must be one of {LAWS}, got {law!r}")
        self.seed = seed
        self.law = law
        self.bit_budget = bit_budget
        self._engine = EngineState(seed, law)
        self._digits: list[int] = []

    @property
    def emitted(self) -> int:
        return len(self._digits)

    @property
    def digits(self) -> tuple[int, ...]:
        return tuple(self._digits)

    @property
    def bits_consumed(self) -> int:
        return self._engine.bits.consumed

    def next_digit(self) -> int:
        k = _engine_next_digit(self._engine, self.bit_budget)
        self._digits.append(k)
        return k

    def take(self, n: int) -> tuple[int, ...]:
        """The first n digits, generating any that are still missing."""
        while len(self._digits) < n:
            self.next_digit()
        return tuple(self._digits[:n])

    def real_interval(self) -> tuple[Fraction, Fraction]:
        """Exact enclosure of the underlying real in the current state.

        The emitted prefix pins a convergent frame; the transducer state
        pins the tail to a rational subinterval of [0, 1].  Composing the
        two gives an interval that always contains the real, and every
        digit emitted so far is a digit of both endpoints (ties are never
        guessed).
        """
        st = self._engine
        if st.in_gauss_phase:
            # still refining the raw uniform candidate: dyadic interval
            lo = Fraction(st.X, 1 << st.m)
            hi = Fraction(st.X + 1, 1 << st.m)
        else:
            t_lo, t_hi = tail_interval(st)
            lo = Fraction(t_lo[0], t_lo[1])
            hi = Fraction(t_hi[0], t_hi[1])
        if lo > hi:
            lo, hi = hi, lo
        if not self._digits:
            return lo, hi
        p, q, p_prev, q_prev = _convergent_frame(self._digits)
        a = Fraction(p + p_prev * lo, q + q_prev * lo)
        b = Fraction(p + p_prev * hi, q + q_prev * hi)
        return (a, b) if a <= b else (b, a)


def digit_stream(seed: int, law: str = "lebesgue") -> RandomRealStream:
    return RandomRealStream(seed, law)


def next_digit(stream: RandomRealStream) -> int:
    return stream.next_digit()


def shift(obj: Union[DigitSequence, RandomRealStream, Iterable[int]], k: int = 1):
    """Drop the first k digits; digit i of the result is digit i+k of the input.

    Finite sequences come back as a new DigitSequence.  Streams are
    advanced in place (consuming k digits) and returned.
    """
    if k < 0:
        raise DomainError("shift count must be >= 0")
    if isinstance(obj, RandomRealStream):
        for _ in range(k):
            obj.next_digit()
        return obj
    seq = DigitSequence.coerce(obj)
    if k > len(seq):
        raise DomainError(f"cannot shift {len(seq)} digits by {k}")
    return DigitSequence(seq.digits[k:])
