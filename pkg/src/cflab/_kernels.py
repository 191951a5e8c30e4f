"""Accelerated kernels and their fallback twins.

Four hot loops live here, each with a numba-compiled version and a pure
numpy (or plain Python, for the inherently sequential digit loop) fallback:

* digit generation for long random trajectories (the bounded-state sampler
  of ``_tailchain``, re-implemented on machine words),
* the truncated pair-product expectation sum,
* the divisor-count sieve,
* the composition power sum.

The digit kernel works in int64 with exact 128-bit products where needed; it
hands single digits back to the Python sampler when a digit is too large for
the machine-word update (about one digit in 2^14) or when v refinement runs
past 60 bits.  The Python side resumes mid-decision from the dumped state,
so both backends emit identical digits.  Numeric kernels agree with their
fallbacks to floating-point roundoff only.
"""

from __future__ import annotations

import math

import numpy as np

from . import _backend, _tailchain
from ._bits import BitSource
from .errors import ResourceError

LOG2 = math.log(2.0)

# State vector layout shared between the kernel and the resume driver:
# S[0] = TL; S[1] = TH (tail interval on the 2^48 grid);
# S[2] = phase (0 rejection pending, 1 extending the accepted cell to 48
#        bits, 2 emitting digits);
# S[3] = X; S[4] = V; S[5] = m (rejection sampler);
# S[6] = cell-extension bits still to draw;
# S[7] = bits left in the buffer; S[8] = VL; S[9] = v bit count (mid-digit).
# R[0] = rng state; R[1] = bit buffer.  Digits land in the out array.
#
# Statuses: 0 = out filled; 1 = current digit needs the exact path;
# 2 = rejection sampler needs the exact path.

#: Kernel cap on the rejection sampler's refinement depth (products must
#: stay inside int64).
_GAUSS_M_LIMIT = 30
#: Kernel cap on v refinement bits within one digit decision.
_V_M_LIMIT = 60
#: Kernel cap on an emitted digit: the t update needs k*2^48 + 2^48 < 2^63.
_K_LIMIT = 1 << 14

if _backend.use_numba():
    from numba import njit

    @njit(cache=True, nogil=True, inline="always")
    def _mulhl(x, y):  # pragma: no cover - compiled
        # full 64x64 -> 128 product of nonnegative values, as (hi, lo) uint64
        ux = np.uint64(x)
        uy = np.uint64(y)
        mask = np.uint64(0xFFFFFFFF)
        x0 = ux & mask
        x1 = ux >> np.uint64(32)
        y0 = uy & mask
        y1 = uy >> np.uint64(32)
        p00 = x0 * y0
        p01 = x0 * y1
        p10 = x1 * y0
        p11 = x1 * y1
        mid = (p00 >> np.uint64(32)) + (p01 & mask) + (p10 & mask)
        lo = (p00 & mask) | ((mid & mask) << np.uint64(32))
        hi = p11 + (p01 >> np.uint64(32)) + (p10 >> np.uint64(32)) + (mid >> np.uint64(32))
        return hi, lo

    @njit(cache=True, nogil=True, inline="always")
    def _le_2p96(q, D, sub_one):  # pragma: no cover - compiled
        # q*D <= 2^96 (sub_one = 0) or q*D <= 2^96 - 1 (sub_one = 1)
        hi, lo = _mulhl(q, D)
        nhi = np.uint64(1) << np.uint64(32)
        if sub_one:
            nhi = nhi - np.uint64(1)
            nlo = ~np.uint64(0)
        else:
            nlo = np.uint64(0)
        if hi != nhi:
            return hi < nhi
        return lo <= nlo

    @njit(cache=True, nogil=True, inline="always")
    def _div_p96(D, ceil_mode):  # pragma: no cover - compiled
        # floor(2^96 / D), or ceil when ceil_mode, exactly; D in (0, 2^63)
        q = np.int64(79228162514264337593543950336.0 / np.float64(D))
        if q < 0:
            q = np.int64(0)
        if q > np.int64(1) << np.int64(48):
            q = np.int64(1) << np.int64(48)
        sub = np.int64(1) if ceil_mode else np.int64(0)
        while not _le_2p96(q, D, sub):
            q -= 1
        while _le_2p96(q + 1, D, sub):
            q += 1
        if ceil_mode:
            q += 1
        return q

    @njit(cache=True, nogil=True)
    def _tail_digits_kernel(S, R, out, start):  # pragma: no cover - compiled
        TL = S[0]
        TH = S[1]
        phase = S[2]
        X = S[3]
        V = S[4]
        m = S[5]
        ext = S[6]
        nbits = S[7]
        vl = S[8]
        mv = S[9]
        rng = R[0]
        buf = R[1]
        pos = start
        n = out.shape[0]
        status = np.int64(0)
        mask48 = (np.uint64(1) << np.uint64(48)) - np.uint64(1)

        while True:
            if phase == 0:
                # Exact rejection sampling of the invariant law: refine x and
                # v one bit each per round until v < 1/(1+x) is decided.
                while phase == 0:
                    if m >= _GAUSS_M_LIMIT:
                        status = np.int64(2)
                        break
                    if nbits == 0:
                        rng = rng + np.uint64(0x9E3779B97F4A7C15)
                        z = rng
                        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
                        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
                        buf = z ^ (z >> np.uint64(31))
                        nbits = np.int64(64)
                    bx = np.int64(buf >> np.uint64(63))
                    buf = buf << np.uint64(1)
                    nbits -= 1
                    if nbits == 0:
                        rng = rng + np.uint64(0x9E3779B97F4A7C15)
                        z = rng
                        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
                        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
                        buf = z ^ (z >> np.uint64(31))
                        nbits = np.int64(64)
                    bv = np.int64(buf >> np.uint64(63))
                    buf = buf << np.uint64(1)
                    nbits -= 1
                    X = 2 * X + bx
                    V = 2 * V + bv
                    m += 1
                    pow2m = np.int64(1) << m
                    sq = np.int64(1) << (2 * m)
                    if (V + 1) * (pow2m + X + 1) <= sq:
                        ext = np.int64(48) - m
                        V = np.int64(0)
                        m = np.int64(0)
                        phase = np.int64(1)
                    elif V * (pow2m + X) >= sq:
                        X = np.int64(0)
                        V = np.int64(0)
                        m = np.int64(0)
                if status != 0:
                    break

            if phase == 1:
                # extend the accepted cell to the 48-bit tail grid
                while ext > 0:
                    if nbits == 0:
                        rng = rng + np.uint64(0x9E3779B97F4A7C15)
                        z = rng
                        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
                        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
                        buf = z ^ (z >> np.uint64(31))
                        nbits = np.int64(64)
                    beta = np.int64(buf >> np.uint64(63))
                    buf = buf << np.uint64(1)
                    nbits -= 1
                    X = 2 * X + beta
                    ext -= 1
                TL = X
                TH = X + 1
                X = np.int64(0)
                phase = np.int64(2)

            while pos < n:
                # one digit: refine v bit by bit until the whole (v, t)
                # rectangle agrees on k, i.e. (k-1)/(k+t) <= v < k/(k+1+t)
                k = np.int64(0)
                while k == 0:
                    if mv > 0:
                        bl = (np.int64(1) << mv) - vl
                        hi, lo = _mulhl(vl, TL)
                        ql = vl + np.int64((hi << np.uint64(16)) | (lo >> np.uint64(48)))
                        kmin = ql // bl + 1
                        bh = bl - 1
                        if bh > 0:
                            hi2, lo2 = _mulhl(vl + 1, TH)
                            qh = vl + 1 + np.int64((hi2 << np.uint64(16)) | (lo2 >> np.uint64(48)))
                            qq = qh // bh
                            if qh - qq * bh == 0 and (lo2 & mask48) == np.uint64(0):
                                ksup = qq
                            else:
                                ksup = qq + 1
                            if kmin == ksup:
                                k = kmin
                        if k == 0 and mv >= _V_M_LIMIT:
                            status = np.int64(1)
                            break
                    if k == 0:
                        if nbits == 0:
                            rng = rng + np.uint64(0x9E3779B97F4A7C15)
                            z = rng
                            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
                            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
                            buf = z ^ (z >> np.uint64(31))
                            nbits = np.int64(64)
                        beta = np.int64(buf >> np.uint64(63))
                        buf = buf << np.uint64(1)
                        nbits -= 1
                        vl = (vl << 1) | beta
                        mv += 1
                if status != 0:
                    break
                if k >= _K_LIMIT:
                    # the t update k*2^48 + TH would leave int64; the exact
                    # path redoes this decision from (vl, mv) and lands on
                    # the same digit
                    status = np.int64(1)
                    break
                out[pos] = k
                pos += 1
                oTL = TL
                oTH = TH
                TL = _div_p96((k << np.int64(48)) + oTH, np.int64(0))
                TH = _div_p96((k << np.int64(48)) + oTL, np.int64(1))
                vl = np.int64(0)
                mv = np.int64(0)
            break

        S[0] = TL
        S[1] = TH
        S[2] = phase
        S[3] = X
        S[4] = V
        S[5] = m
        S[6] = ext
        S[7] = nbits
        S[8] = vl
        S[9] = mv
        R[0] = rng
        R[1] = buf
        return pos, status

    @njit(cache=True, nogil=True)
    def _pair_expectation_numba(t_floor):  # pragma: no cover - compiled
        inv_log2 = 1.0 / np.log(2.0)
        total = 0.0
        comp = 0.0
        for i in range(1, t_floor + 1):
            jmax = t_floor // i
            for j in range(1, jmax + 1):
                ij = i * j
                den = (ij + i + 1.0) * (ij + j + 1.0)
                term = ij * np.log1p(1.0 / den) * inv_log2
                s = total + term
                if abs(total) >= abs(term):
                    comp += (total - s) + term
                else:
                    comp += (term - s) + total
                total = s
        return total + comp

    @njit(cache=True, nogil=True)
    def _divisor_sieve_numba(limit):  # pragma: no cover - compiled
        counts = np.zeros(limit + 1, np.int32)
        for d in range(1, limit + 1):
            for mult in range(d, limit + 1, d):
                counts[mult] += 1
        return counts

    @njit(cache=True, nogil=True)
    def _composition_sum_numba(n, m, two_s):  # pragma: no cover - compiled
        powtab = np.empty(m + 1, np.float64)
        powtab[0] = 0.0
        for v in range(1, m + 1):
            powtab[v] = v ** (-two_s)
        if n == 1:
            return powtab[m]
        p = np.ones(n, np.int64)
        p[n - 1] = m - (n - 1)
        prefix = np.empty(n, np.float64)
        prefix[0] = 1.0
        for i in range(1, n):
            prefix[i] = prefix[i - 1] * powtab[p[i - 1]]
        total = 0.0
        comp = 0.0
        while True:
            term = prefix[n - 1] * powtab[p[n - 1]]
            s = total + term
            if abs(total) >= abs(term):
                comp += (total - s) + term
            else:
                comp += (term - s) + total
            total = s
            # advance to the next composition in lexicographic order
            i = n - 2
            advanced = False
            while i >= 0 and not advanced:
                used = np.int64(0)
                for k in range(i + 1):
                    used += p[k]
                if used + 1 + (n - 1 - i) <= m:
                    p[i] += 1
                    for k in range(i + 1, n - 1):
                        p[k] = 1
                    tail = np.int64(0)
                    for k in range(n - 1):
                        tail += p[k]
                    p[n - 1] = m - tail
                    for k in range(i, n - 1):
                        prefix[k + 1] = prefix[k] * powtab[p[k]]
                    advanced = True
                else:
                    i -= 1
            if not advanced:
                break
        return total + comp

else:
    _tail_digits_kernel = None
    _pair_expectation_numba = None
    _divisor_sieve_numba = None
    _composition_sum_numba = None


def generate_digits(seed: int, law: str, n: int) -> np.ndarray:
    """First n partial quotients of a fresh random trajectory, as int64.

    The two backends return identical arrays.  A digit outside the int64
    range (probability below 1e-18 per digit) raises ResourceError; callers
    needing unbounded digits should walk a RandomRealStream instead.
    """
    if law not in ("lebesgue", "gauss"):
        raise ValueError(f"unknown law {law!r}")
    if _tail_digits_kernel is None:
        return _tailchain.chain_digits(seed, law, n)

    out = np.empty(n, dtype=np.int64)
    S = np.zeros(10, dtype=np.int64)
    R = np.zeros(2, dtype=np.uint64)
    R[0] = np.uint64(seed & ((1 << 64) - 1))
    S[2] = 0 if law == "gauss" else 2
    pos = 0
    while pos < n:
        pos, status = _tail_digits_kernel(S, R, out, pos)
        pos = int(pos)
        if status == 0:
            break
        bits = BitSource.__new__(BitSource)
        bits.state = int(R[0])
        bits.buf = int(R[1])
        bits.nbits = int(S[7])
        bits.consumed = 0
        if status == 2:
            X, m = _tailchain.gauss_cell(bits, int(S[3]), int(S[4]), int(S[5]))
            TL, TH = _tailchain.cell_to_interval(bits, X, m)
            S[0], S[1] = TL, TH
            S[2] = 2
            S[3] = S[4] = S[5] = S[6] = 0
        else:
            k = _tailchain.digit_step(bits, int(S[0]), int(S[1]), int(S[8]), int(S[9]))
            if k >= _tailchain._DIGIT_LIMIT:
                raise ResourceError("partial quotient exceeds the int64 digit array range")
            out[pos] = k
            pos += 1
            TL, TH = _tailchain.refine_interval(k, int(S[0]), int(S[1]))
            S[0], S[1] = TL, TH
            S[8] = S[9] = 0
        S[7] = bits.nbits
        R[0] = np.uint64(bits.state)
        R[1] = np.uint64(bits.buf)
    return out


def pair_expectation_sum(threshold: float) -> float:
    """Sum of i*j*mu(cyl(i, j)) over pairs with i*j <= threshold."""
    t_floor = int(math.floor(threshold))
    if _pair_expectation_numba is not None:
        return float(_pair_expectation_numba(t_floor))
    return _pair_expectation_numpy(t_floor)


def _pair_expectation_numpy(t_floor: int) -> float:
    total = 0.0
    comp = 0.0
    chunk = 1 << 22
    i = 1
    while i <= t_floor:
        q = t_floor // i
        i_hi = t_floor // q  # largest i sharing this quotient
        width = max(1, chunk // q)
        lo = i
        while lo <= i_hi:
            hi = min(i_hi, lo + width - 1)
            iv = np.arange(lo, hi + 1, dtype=np.float64)[:, None]
            jv = np.arange(1, q + 1, dtype=np.float64)[None, :]
            ij = iv * jv
            den = (ij + iv + 1.0) * (ij + jv + 1.0)
            block = float(np.sum(ij * np.log1p(1.0 / den)))
            s = total + block
            if abs(total) >= abs(block):
                comp += (total - s) + block
            else:
                comp += (block - s) + total
            total = s
            lo = hi + 1
        i = i_hi + 1
    return (total + comp) / LOG2


def divisor_sieve(limit: int) -> np.ndarray:
    """Divisor counts for 1..limit (index 0 unused), as int32."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    if _divisor_sieve_numba is not None:
        return _divisor_sieve_numba(limit)
    counts = np.zeros(limit + 1, dtype=np.int32)
    for d in range(1, limit + 1):
        counts[d::d] += 1
    return counts


def composition_power_sum(n: int, m: int, two_s: float) -> float:
    """Sum over ordered n-part compositions of m of the product of part^(-two_s)."""
    if _composition_sum_numba is not None:
        return float(_composition_sum_numba(n, m, two_s))
    powtab = [0.0] + [v ** (-two_s) for v in range(1, m + 1)]
    total = 0.0
    comp = 0.0

    def _accumulate(term: float) -> None:
        nonlocal total, comp
        s = total + term
        if abs(total) >= abs(term):
            comp += (total - s) + term
        else:
            comp += (term - s) + total
        total = s

    def _rec(parts_left: int, remaining: int, prod: float) -> None:
        if parts_left == 1:
            _accumulate(prod * powtab[remaining])
            return
        for v in range(1, remaining - parts_left + 2):
            _rec(parts_left - 1, remaining - v, prod * powtab[v])

    _rec(n, m, 1.0)
    return total + comp
