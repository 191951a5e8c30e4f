"""Bounded-state digit sampler for long random trajectories.

The exact transducer in ``_engine`` carries the convergent denominators
inside its matrix, so its entries grow by about 1.7 bits per digit and the
cost of digit n is proportional to n.  That is fine for a few thousand
digits and for oracle checks, but a million-digit trajectory needs a sampler
whose per-digit cost does not grow.  This module provides one.

It rests on the chain rule for the digit process.  Write q_k for the
denominators of the emitted prefix and t = q_{n-1}/q_n for the tail
parameter.  Conditioned on the first n digits, the distribution of the
remaining tail y has density (1+t)/(1+t*y)^2, and the next digit satisfies

    P(a_{n+1} <= k | t) = k / (k + 1 + t),

an exact rational formula.  The parameter updates as t' = 1/(k + t).  The
uniform law is this chain started from t = 0.  The invariant law is the same
chain started from t distributed with density 1/((1+t) log 2): mixing the
density family over that start reproduces 1/((1+x) log 2) for the real and
log2(1 + 1/(k(k+2))) for every digit, so the chain is stationary.  The start
is drawn with the same exact rejection sampler the transducer uses.

Sampling a digit draws fresh bits into a uniform v and emits k as soon as

    (k-1)/(k+t) <= v < k/(k+1+t)

holds for every value in the current enclosures of v and t.  t itself is
held as an interval [TL, TH]/2^48 that always contains the true parameter:
each update rounds outward, so every digit ever emitted is a true digit of a
real carrying the requested law.  The rounding slack leaves a per-digit
probability of order 2^-40 that no amount of v refinement can decide the
digit; that event raises ResourceError rather than guess.  The state is four
machine words, the expected cost is about 5.3 fresh bits and two exact
comparisons per digit, forever.

Streams drawn here and streams drawn by ``_engine`` from the same seed are
different reals (the constructions spend their bits differently); both carry
the requested law and both are deterministic in (seed, law).
"""

from __future__ import annotations

import numpy as np

from ._bits import BitSource
from .errors import ResourceError

#: Tail-parameter grid: t is kept as an integer interval over 2^48.
T_BITS = 48
T_ONE = 1 << T_BITS

#: Undecided-digit guards: once v holds this many bits and the digit is still
#: open because of tail slack (or at all), give up loudly.
_STRADDLE_M = 128
_HARD_M = 192

#: Digits at or above this would not fit the int64 arrays the trial runners
#: use.  Probability ~2^-62 per digit; raising keeps the arrays honest.
_DIGIT_LIMIT = 1 << 62


def gauss_cell(bits, X: int = 0, V: int = 0, m: int = 0, cap: int = 4096) -> tuple[int, int]:
    """Exact rejection sampling of the invariant density, to a dyadic cell.

    Draws (x, v) uniformly bit by bit (x bit first each round) and accepts
    once v < 1/(1+x) holds over the whole current cell; a decided reject
    restarts.  Returns (X, m) with x uniform on [X, X+1]/2^m conditioned on
    acceptance, which makes the accepted x exactly invariant-distributed.
    """
    while True:
        X = 2 * X + bits.next_bit()
        V = 2 * V + bits.next_bit()
        m += 1
        pow2m = 1 << m
        sq = 1 << (2 * m)
        if (V + 1) * (pow2m + X + 1) <= sq:
            return X, m
        if V * (pow2m + X) >= sq:
            X = V = m = 0
        if m > cap:
            raise ResourceError(
                "rejection sampler exceeded the refinement cap; "
                "the bit stream encodes a boundary point"
            )


def cell_to_interval(bits, X: int, m: int) -> tuple[int, int]:
    """Grid interval for a start uniform on [X, X+1]/2^m: refine or coarsen to 48 bits."""
    if m < T_BITS:
        for _ in range(T_BITS - m):
            X = 2 * X + bits.next_bit()
    elif m > T_BITS:
        X >>= m - T_BITS
    return X, X + 1


def initial_interval(bits, law: str) -> tuple[int, int]:
    """Starting tail interval [TL, TH] on the 2^48 grid for the given law."""
    if law == "lebesgue":
        return 0, 0
    if law != "gauss":
        raise ValueError(f"unknown law {law!r}")
    X, m = gauss_cell(bits)
    return cell_to_interval(bits, X, m)


def digit_step(bits, TL: int, TH: int, VL: int = 0, m: int = 0) -> int:
    """Draw the next digit exactly; (VL, m) resume a partially refined v.

    Emits k only when the whole rectangle [VL, VL+1)/2^m x [TL, TH]/2^48
    agrees on it, so the result is the true digit of every completion of the
    current state.  Raises ResourceError if the tail slack straddles a digit
    boundary that v refinement cannot settle.
    """
    base = T_ONE + TL
    top = T_ONE + TH
    while True:
        if m > 0:
            bl = (1 << m) - VL
            kmin = (VL * base) // (bl << T_BITS) + 1
            bh = bl - 1
            if bh > 0:
                num = (VL + 1) * top
                q, r = divmod(num, bh << T_BITS)
                ksup = q if r == 0 else q + 1
                if kmin == ksup:
                    return kmin
            if m >= _STRADDLE_M:
                khi = (VL * top) // (bl << T_BITS) + 1
                if khi != kmin or m >= _HARD_M:
                    raise ResourceError(
                        "tail interval slack straddles a digit boundary; "
                        "refusing to guess the digit"
                    )
        VL = (VL << 1) | bits.next_bit()
        m += 1


def refine_interval(k: int, TL: int, TH: int) -> tuple[int, int]:
    """Outward-rounded update t -> 1/(k + t) on the 2^48 grid."""
    scale = 1 << (2 * T_BITS)  # (2^48)^2: one grid factor per side of the quotient
    lo = scale // ((k << T_BITS) + TH)
    hi = -((-scale) // ((k << T_BITS) + TL))
    return lo, hi


def chain_digits(seed: int, law: str, n: int) -> np.ndarray:
    """First n digits of a fresh trajectory, pure Python backend."""
    out = np.empty(n, dtype=np.int64)
    bits = BitSource(seed)
    TL, TH = initial_interval(bits, law)
    for i in range(n):
        k = digit_step(bits, TL, TH)
        if k >= _DIGIT_LIMIT:
            raise ResourceError("partial quotient exceeds the int64 digit array range")
        out[i] = k
        TL, TH = refine_interval(k, TL, TH)
    return out
