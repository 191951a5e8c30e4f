"""Deterministic random-bit supply.

A SplitMix64 generator drives every random choice in the package.  Streams
consume its 64-bit outputs one bit at a time, most significant bit first, so
a stream is fully determined by its starting state.  The same constants and
consumption order are re-implemented inside the compiled kernels; the two
paths must stay bit-for-bit identical (tests enforce this).
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 output function: a bijective avalanche mix of one word."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def splitmix_next(state: int) -> tuple[int, int]:
    """Advance one SplitMix64 step; returns (new_state, output_word)."""
    state = (state + GOLDEN64) & MASK64
    return state, mix64(state)


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Decorrelated per-trial stream seed.

    Mixing the trial index through the avalanche function before combining
    keeps the per-trial streams statistically independent and makes the
    mapping order-free: trial i's digits do not depend on how many trials
    run or in which order they are scheduled.
    """
    if trial_index < 0:
        raise ValueError("trial_index must be >= 0")
    return mix64((master_seed & MASK64) ^ mix64((GOLDEN64 * (trial_index + 1)) & MASK64))


class BitSource:
    """MSB-first bit reader over a SplitMix64 word stream."""

    __slots__ = ("state", "buf", "nbits", "consumed")

    def __init__(self, seed: int):
        self.state = seed & MASK64
        self.buf = 0
        self.nbits = 0
        self.consumed = 0

    def next_bit(self) -> int:
        if self.nbits == 0:
            self.state, self.buf = splitmix_next(self.state)
            self.nbits = 64
        bit = (self.buf >> 63) & 1
        self.buf = (self.buf << 1) & MASK64
        self.nbits -= 1
        self.consumed += 1
        return bit
