"""Exact digit machinery: expansions, cylinders, streams."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cflab.cf_core import (
    CylinderInterval,
    DigitSequence,
    RandomRealStream,
    convergents,
    cylinder,
    digit_stream,
    expand_rational,
    shift,
    value,
)
from cflab.errors import DomainError

from conftest import canonical_sequences, continuants

digit_tuples = st.lists(st.integers(1, 30), min_size=1, max_size=8).map(tuple)


class TestExpandRational:
    def test_examples(self):
        assert expand_rational(7, 10).digits == (1, 2, 3)
        assert expand_rational(1, 3).digits == (3,)
        assert expand_rational(2, 5).digits == (2, 2)
        assert expand_rational(1, 2).digits == (2,)

    def test_non_reduced_and_negative_denominator(self):
        assert expand_rational(14, 20).digits == (1, 2, 3)
        assert expand_rational(-7, -10).digits == (1, 2, 3)

    def test_domain_errors(self):
        for num, den in [(0, 5), (5, 5), (7, 5), (-1, 3), (1, 0)]:
            with pytest.raises(DomainError):
                expand_rational(num, den)

    def test_max_digits_truncates(self):
        full = expand_rational(89, 144)
        assert full.digits[:4] == (1, 1, 1, 1)
        cut = expand_rational(89, 144, max_digits=3)
        assert cut.digits == full.digits[:3]
        with pytest.raises(DomainError):
            expand_rational(1, 3, max_digits=0)

    def test_canonical_last_digit(self):
        # the Euclidean recursion never ends in 1 except for single digits
        for den in range(2, 200):
            for num in range(1, den):
                d = expand_rational(num, den).digits
                assert len(d) == 1 or d[-1] >= 2


class TestValueAndConvergents:
    def test_round_trip_exhaustive(self):
        for seq in canonical_sequences(4, 5):
            if seq == (1,):
                continue  # value 1, the one prefix that is not a real's expansion
            v = value(seq)
            assert expand_rational(v.numerator, v.denominator).digits == seq

    def test_convergent_determinant_alternates(self):
        convs = convergents((1, 2, 3, 4, 5))
        p_prev, q_prev = 0, 1
        for k, c in enumerate(convs, start=1):
            det = c.p * q_prev - p_prev * c.q
            assert det == (1 if k % 2 else -1)
            p_prev, q_prev = c.p, c.q

    def test_denominators_strictly_increase_from_second(self):
        convs = convergents((1, 1, 1, 1, 1, 1))
        qs = [c.value.denominator for c in convs]
        assert all(b > a for a, b in zip(qs[1:], qs[2:]))

    @given(digit_tuples, st.integers(1, 50))
    def test_appending_digit_moves_less_than_inverse_q_squared(self, seq, extra):
        q = continuants(seq)[1]
        assert abs(value(seq + (extra,)) - value(seq)) < Fraction(1, q * q)

    @given(digit_tuples)
    def test_value_matches_continuant_frame(self, seq):
        p, q, _, _ = continuants(seq)
        assert value(seq) == Fraction(p, q)

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            value(())
        with pytest.raises(DomainError):
            convergents(())
        with pytest.raises(DomainError):
            cylinder(())


class TestCylinder:
    def test_length_identity_exhaustive(self):
        for seq in canonical_sequences(4, 5):
            p, q, p_prev, q_prev = continuants(seq)
            cyl = cylinder(seq)
            assert cyl.length == Fraction(1, q * (q + q_prev))

    def test_two_sided_digit_bound_exhaustive(self):
        # 2^-(2n+1) / prod a_k^2  <=  length  <=  prod a_k^2^-1
        for seq in canonical_sequences(4, 5):
            n = len(seq)
            prod_sq = 1
            for a in seq:
                prod_sq *= a * a
            ln = cylinder(seq).length
            assert Fraction(1, (1 << (2 * n + 1)) * prod_sq) <= ln <= Fraction(1, prod_sq)

    def test_parity_determines_closed_end(self):
        odd = cylinder((2, 3, 1))
        assert odd.parity == 1 and odd.hi_closed and not odd.lo_closed
        assert odd.hi == value((2, 3, 1))
        even = cylinder((2, 3))
        assert even.parity == 0 and even.lo_closed and not even.hi_closed
        assert even.lo == value((2, 3))

    def test_contains_value_and_respects_open_end(self):
        cyl = cylinder((1, 2))
        assert cyl.contains(value((1, 2)))
        assert not cyl.contains(cyl.hi)
        assert cyl.contains(cyl.lo)

    @given(digit_tuples)
    def test_nesting(self, seq):
        outer = cylinder(seq[:-1]) if len(seq) > 1 else None
        inner = cylinder(seq)
        if outer is not None:
            assert outer.lo <= inner.lo and inner.hi <= outer.hi

    @given(digit_tuples)
    def test_interior_points_expand_to_the_prefix(self, seq):
        cyl = cylinder(seq)
        mid = (cyl.lo + cyl.hi) / 2
        got = expand_rational(mid.numerator, mid.denominator, max_digits=len(seq))
        assert got.digits == tuple(seq)


class TestDigitSequence:
    def test_validation(self):
        with pytest.raises(DomainError):
            DigitSequence((0,))
        with pytest.raises(DomainError):
            DigitSequence((1, -2))
        with pytest.raises(DomainError):
            DigitSequence((True,))

    def test_slicing_and_canonical_flag(self):
        d = DigitSequence((1, 2, 3))
        assert d[1] == 2
        assert d[1:].digits == (2, 3)
        assert d.is_canonical
        assert not DigitSequence((2, 1)).is_canonical
        assert DigitSequence((1,)).is_canonical

    def test_shift(self):
        assert shift((1, 2, 3), 1).digits == (2, 3)
        assert shift((1, 2, 3), 0).digits == (1, 2, 3)
        with pytest.raises(DomainError):
            shift((1, 2), 3)
        with pytest.raises(DomainError):
            shift((1, 2), -1)


def _drain_free_digits(stream: RandomRealStream) -> None:
    """Emit every digit decidable without consuming more input bits."""
    st = stream._engine
    while True:
        snap = (st.a, st.b, st.c, st.d, st.X, st.V, st.m, st.in_gauss_phase,
                st.bits.state, st.bits.buf, st.bits.nbits, st.bits.consumed)
        before = st.bits.consumed
        stream.next_digit()
        if st.bits.consumed > before:
            (st.a, st.b, st.c, st.d, st.X, st.V, st.m, st.in_gauss_phase,
             st.bits.state, st.bits.buf, st.bits.nbits, st.bits.consumed) = snap
            stream._digits.pop()
            return


class TestRandomRealStream:
    def test_law_validation(self):
        with pytest.raises(DomainError):
            digit_stream(1, "uniform")

    def test_deterministic_per_seed(self):
        a = digit_stream(42, "gauss").take(30)
        b = digit_stream(42, "gauss").take(30)
        assert a == b
        assert digit_stream(43, "gauss").take(30) != a

    def test_take_is_idempotent_and_extends(self):
        s = digit_stream(7)
        first = s.take(10)
        assert s.take(5) == first[:5]
        assert s.take(15)[:10] == first

    def test_shift_advances_stream(self):
        s = digit_stream(11)
        ref = digit_stream(11).take(6)
        shift(s, 2)
        assert s.take(6) == ref  # take counts from the start of the stream
        assert s.emitted >= 2

    def test_real_interval_narrows_and_contains(self):
        s = digit_stream(5, "lebesgue")
        widths = []
        for _ in range(8):
            s.next_digit()
            lo, hi = s.real_interval()
            assert 0 <= lo <= hi <= 1
            widths.append(hi - lo)
        assert widths[-1] < widths[0]

    @pytest.mark.slow
    def test_freeze_oracle_1000_seeds(self):
        """After ~256 input bits, emitted digits are exactly what the exact
        state interval determines: the interval sits inside their cylinder
        (no wrong digit can ever be emitted) and the engine's own endpoint
        floors disagree about the next one (no digit is left behind)."""
        for seed in range(1000):
            law = "lebesgue" if seed % 2 == 0 else "gauss"
            s = digit_stream(seed, law)
            while s.bits_consumed < 256:
                s.next_digit()
            _drain_free_digits(s)
            emitted = s.digits
            lo, hi = s.real_interval()
            assert lo < hi
            if emitted:
                cyl = cylinder(emitted)
                assert cyl.lo <= lo and hi <= cyl.hi, (seed, law)
            eng = s._engine
            assert not eng.in_gauss_phase
            a, b, c, d = eng.a, eng.b, eng.c, eng.d
            undecided = (b == 0 or a + b <= 0 or d // b != (c + d) // (a + b))
            assert undecided, (seed, law, emitted)


def _first_digit_exact_prob(k: int, law: str) -> float:
    if law == "lebesgue":
        return 1.0 / k - 1.0 / (k + 1)
    return math.log2(1 + 1 / (k * (k + 2)))


@pytest.mark.slow
class TestFirstDigitLaw:
    TRIALS = 4000

    def _freqs(self, law):
        counts = {}
        for seed in range(self.TRIALS):
            a1 = digit_stream(seed, law).take(1)[0]
            counts[a1] = counts.get(a1, 0) + 1
        return counts

    @pytest.mark.parametrize("law", ["lebesgue", "gauss"])
    def test_first_digit_frequencies(self, law):
        counts = self._freqs(law)
        for k in range(1, 9):
            p = _first_digit_exact_prob(k, law)
            se = math.sqrt(p * (1 - p) / self.TRIALS)
            f = counts.get(k, 0) / self.TRIALS
            assert abs(f - p) <= 4 * se, (law, k, f, p)


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10**9), st.sampled_from(["lebesgue", "gauss"]))
def test_stream_digits_are_positive_integers(seed, law):
    for d in digit_stream(seed, law).take(5):
        assert isinstance(d, int) and d >= 1
