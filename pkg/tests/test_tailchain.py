"""Exactness of the bounded-state digit sampler.

The digit process is Markov in the tail ratio t with conditional law
P(a <= k | t) = k/(k+1+t); the sampler inverts that CDF from raw bits while
holding t as an outward-rounded 48-bit interval.  These tests certify the
inversion by exhaustive enumeration of bit scripts and the interval update
by exact rational comparison.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cflab._tailchain import (
    T_BITS,
    T_ONE,
    chain_digits,
    digit_step,
    initial_interval,
    refine_interval,
)
from cflab._bits import BitSource
from cflab.errors import ResourceError


class ScriptedBits:
    """Feeds a fixed bit script; raises when asked for more."""

    def __init__(self, bits):
        self._bits = list(bits)
        self._pos = 0

    def next_bit(self) -> int:
        if self._pos >= len(self._bits):
            raise IndexError("script exhausted")
        b = self._bits[self._pos]
        self._pos += 1
        return b


def _conditional_prob(k: int, t: Fraction) -> Fraction:
    # P(a = k | t) = k/(k+1+t) - (k-1)/(k+t)
    return Fraction(k, k + 1 + t) - Fraction(k - 1, k + t)


@pytest.mark.slow
@pytest.mark.parametrize("T", [0, 1 << 47, (1 << 48) - 1, 12345678901234])
def test_digit_mass_brackets_exact_law(T):
    """Over every 14-bit script, the decided digit masses bracket the exact
    conditional probabilities: decided(k)/2^L <= P(k|t) <= (decided(k)+open)/2^L."""
    L = 14
    t = Fraction(T, T_ONE)
    decided: dict[int, int] = {}
    undecided = 0
    for word in range(1 << L):
        script = [(word >> (L - 1 - i)) & 1 for i in range(L)]
        try:
            k = digit_step(ScriptedBits(script), T, T)
        except IndexError:
            undecided += 1
            continue
        decided[k] = decided.get(k, 0) + 1
    total = 1 << L
    assert undecided / total < 0.04
    for k in range(1, 40):
        p = _conditional_prob(k, t)
        lo = Fraction(decided.get(k, 0), total)
        hi = Fraction(decided.get(k, 0) + undecided, total)
        assert lo <= p <= hi, (k, float(lo), float(p), float(hi))


@settings(deadline=None, max_examples=200)
@given(st.integers(0, 2**64 - 1), st.integers(0, T_ONE - 2), st.integers(0, 400))
def test_interval_decision_agrees_with_both_endpoints(seed, TL, width):
    """A digit decided for a t interval is the digit of every t in it."""
    TH = min(TL + width, T_ONE - 1)
    script = []
    state = seed
    for _ in range(6):
        state = (state * 6364136223846793005 + 1442695040888963407) % 2**64
        script.extend((state >> (63 - i)) & 1 for i in range(64))
    try:
        k = digit_step(ScriptedBits(script), TL, TH)
    except (IndexError, ResourceError):
        return  # undecided scripts carry no claim
    assert k == digit_step(ScriptedBits(script), TL, TL)
    assert k == digit_step(ScriptedBits(script), TH, TH)


def test_refine_interval_outward_rounding_exhaustive():
    scale = Fraction(1, T_ONE)
    for k in [1, 2, 3, 7, 40, 1000]:
        for TL, TH in [(0, 0), (0, 5), (123456789, 123456999), (T_ONE - 2, T_ONE - 1)]:
            lo, hi = refine_interval(k, TL, TH)
            exact_lo = 1 / (k + TH * scale)
            exact_hi = 1 / (k + TL * scale)
            assert Fraction(lo, T_ONE) <= exact_lo
            assert exact_hi <= Fraction(hi, T_ONE)
            # tight to one grid step on each side
            assert Fraction(lo + 1, T_ONE) > exact_lo
            assert Fraction(hi - 1, T_ONE) < exact_hi


def test_initial_interval_laws():
    assert initial_interval(BitSource(3), "lebesgue") == (0, 0)
    TL, TH = initial_interval(BitSource(3), "gauss")
    assert 0 <= TL < TH <= T_ONE
    assert TH - TL == 1  # one 48-bit grid cell
    with pytest.raises(ValueError):
        initial_interval(BitSource(3), "exponential")


def test_chain_digits_deterministic_and_positive():
    a = chain_digits(99, "gauss", 500)
    b = chain_digits(99, "gauss", 500)
    assert np.array_equal(a, b)
    assert int(a.min()) >= 1
    assert not np.array_equal(a, chain_digits(100, "gauss", 500))


def test_chain_digits_lebesgue_vs_gauss_differ():
    assert not np.array_equal(chain_digits(5, "lebesgue", 200), chain_digits(5, "gauss", 200))


@pytest.mark.slow
def test_digit_frequencies_single_trajectory():
    """Ergodic digit frequencies approach the invariant cell masses."""
    n = 60_000
    d = chain_digits(MASTER := 2026, "lebesgue", n)
    for k in range(1, 6):
        p = math.log2(1 + 1 / (k * (k + 2)))
        f = float(np.count_nonzero(d == k)) / n
        # correlated samples: allow 6 iid-standard-errors of slack
        assert abs(f - p) < 6 * math.sqrt(p * (1 - p) / n), (k, f, p)
