"""Exact digit extraction for random reals, reference implementation.

A random real x in (0,1) is the value of an infinite random bit stream.  The
engine keeps an integer matrix (a, b; c, d) meaning

    x = (a*u + b) / (c*u + d)

where u in [0, 1] is the value of the not-yet-consumed bit tail.  Absorbing
one bit beta replaces u by (beta + u')/2, i.e.

    (a, b, c, d) -> (a, a*beta + 2b, c, c*beta + 2d).

The continued-fraction digit k = floor(1/x) is emitted only when it is the
same at both endpoints of the current interval (u = 0 and u = 1); emitting
maps x to 1/x - k:

    (a, b, c, d) -> (c - k*a, d - k*b, a, b),

followed by a gcd renormalization.  Ties at interval boundaries are never
guessed: the engine absorbs more bits until the digit is forced.  All
arithmetic is exact (Python integers), so the emitted digits are exactly the
partial quotients of the underlying real.

Matrix invariants maintained throughout: d > 0, c + d > 0, b >= 0,
a + b >= 0 (the interval endpoints b/d and (a+b)/(c+d) stay in [0, 1]).

For the gauss law the engine first runs an exact rejection sampler: draw x
and v uniformly (bit by bit, x bit before v bit each round), accept when
v < 1/(1+x), decided by integer interval tests.  Acceptance probability is
log 2, and conditioned on acceptance x follows the invariant density
1/((1+x) log 2) exactly.  The accepted x prefix seeds the digit matrix.
"""

from __future__ import annotations

from math import gcd

from ._bits import BitSource
from .errors import ResourceError

#: Abort threshold: no matrix entry may exceed this many bits.  Reaching it
#: means the input real is (a truncation of) a rational whose digit can never
#: be decided, which has probability zero under either law.
DEFAULT_BIT_BUDGET = 4096

LAWS = ("lebesgue", "gauss")


class EngineState:
    """Mutable, single-owner state of one digit stream."""

    __slots__ = ("law", "bits", "a", "b", "c", "d", "in_gauss_phase", "X", "V", "m")

    def __init__(self, seed: int, law: str):
        if law not in LAWS:
            raise ValueError(f"law must be one of {LAWS}, got {law!r}")
        self.law = law
        self.bits = BitSource(seed)
        self.a, self.b, self.c, self.d = 1, 0, 0, 1
        self.X = 0
        self.V = 0
        self.m = 0
        self.in_gauss_phase = law == "gauss"


def _gauss_round(st: EngineState) -> bool:
    """One refinement round of the rejection sampler; True when accepted.

    After m rounds x lies in [X, X+1]/2^m and v in [V, V+1]/2^m.  The accept
    region is v*(1+x) < 1; the round decides only when every completion of
    the current prefixes agrees, otherwise it absorbs one more bit of each.
    """
    st.X = 2 * st.X + st.bits.next_bit()
    st.V = 2 * st.V + st.bits.next_bit()
    st.m += 1
    pow2m = 1 << st.m
    sq = 1 << (2 * st.m)
    if (st.V + 1) * (pow2m + st.X + 1) <= sq:
        return True
    if st.V * (pow2m + st.X) >= sq:
        st.X = 0
        st.V = 0
        st.m = 0
    return False


def ensure_digit_phase(st: EngineState, bit_budget: int = DEFAULT_BIT_BUDGET) -> None:
    """Run the rejection sampler (if pending) and seed the digit matrix."""
    if not st.in_gauss_phase:
        return
    while not _gauss_round(st):
        if st.m > bit_budget:
            raise ResourceError(
                "gauss rejection sampler exceeded the bit budget; "
                "the underlying bit stream encodes a boundary point"
            )
    st.a, st.b, st.c, st.d = 1, st.X, 0, 1 << st.m
    st.X = st.V = st.m = 0
    st.in_gauss_phase = False


def next_digit(st: EngineState, bit_budget: int = DEFAULT_BIT_BUDGET) -> int:
    """Emit the next partial quotient of the stream's real, exactly."""
    ensure_digit_phase(st, bit_budget)
    a, b, c, d = st.a, st.b, st.c, st.d
    budget = 1 << bit_budget
    while True:
        if b > 0 and a + b > 0:
            k = d // b
            if k == (c + d) // (a + b):
                a, b, c, d = c - k * a, d - k * b, a, b
                g = gcd(gcd(abs(a), b), gcd(abs(c), d))
                if g > 1:
                    a //= g
                    b //= g
                    c //= g
                    d //= g
                st.a, st.b, st.c, st.d = a, b, c, d
                return k
        if b >= budget or d >= budget or abs(a) >= budget or abs(c) >= budget:
            raise ResourceError(
                f"digit matrix entry exceeded the {bit_budget}-bit budget; "
                "the stream's real is pinned at a cylinder boundary"
            )
        beta = st.bits.next_bit()
        b = a * beta + 2 * b
        d = c * beta + 2 * d


def tail_interval(st: EngineState):
    """Exact endpoints (as integer pairs) of the unconsumed tail's image.

    Returns ((n0, d0), (n1, d1)) for the u = 0 and u = 1 endpoints of the
    current matrix.  Before the gauss phase has resolved this is the whole
    unit interval.
    """
    if st.in_gauss_phase:
        return (0, 1), (1, 1)
    return (st.b, st.d), (st.a + st.b, st.c + st.d)
