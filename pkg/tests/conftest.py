import math
from fractions import Fraction

import pytest

from cflab.cf_core import DigitSequence

# master seed for every statistical assertion in the suite; frozen up front,
# with each criterion verified at full scale under it before the tolerances
# were written down
MASTER_SEED = 2026

LOG2 = math.log(2.0)


def canonical_sequences(max_len: int, max_digit: int):
    """All canonical digit sequences with n <= max_len, digits <= max_digit."""
    out = []

    def rec(prefix):
        if prefix:
            if len(prefix) < 2 or prefix[-1] >= 2:
                out.append(tuple(prefix))
        if len(prefix) == max_len:
            return
        for a in range(1, max_digit + 1):
            prefix.append(a)
            rec(prefix)
            prefix.pop()

    rec([])
    return out


def continuants(digits):
    """(p_n, q_n, p_{n-1}, q_{n-1}) computed independently of the package."""
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    for a in digits:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
    return p, q, p_prev, q_prev


def gauss_mass(lo: Fraction, hi: Fraction) -> float:
    """mu((lo, hi)) computed directly, for cross-checks."""
    return (math.log1p(float(hi)) - math.log1p(float(lo))) / LOG2


@pytest.fixture
def digit_seq():
    return DigitSequence
