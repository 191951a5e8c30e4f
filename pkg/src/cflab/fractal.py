"""Cantor constructions over continued-fraction digits.

Two constructions of subsets of (0, 1) with prescribed growth of the pair
sum S_n, both driven by a growth target phi (psi = log phi throughout):

* a sparse-spike schedule: huge prescribed digits at sparse indices n_k
  with 1s beside them and small fillers elsewhere, which forces
  S_{n_k} >= (1 + eps_k) phi(n_k) by a telescoping lower bound;
* a digit envelope: every digit confined to [d_n, (1 + 1/psi(n)) d_n]
  where d_n d_{n+1} = phi(n) - phi(n-1), which pins S_n/phi(n) -> 1.

Dimension estimates come from the nested-interval lower bound
liminf log(m_1..m_{n-1})/(-log(m_n eps_n)) and from covering-count
diagnostics.  phi overflows any float quickly, so the recurrences and all
comparisons run in log space; the one primitive that needs care is
log(e^a - e^b) = a + log1p(-e^(b-a)).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from ._bits import GOLDEN64, MASK64, mix64
from .arith import constructive_c_epsilon, zeta
from .errors import DomainError, ResourceError

__all__ = [
    "GrowthFunction",
    "SparseSchedule",
    "ScheduledSample",
    "DigitEnvelope",
    "EnvelopeSample",
    "DimensionEstimate",
    "CoveringStats",
    "SparseHypothesesReport",
    "log_exp_diff",
    "feasible_delta_interval",
    "build_sparse_schedule",
    "sample_scheduled_digits",
    "build_digit_envelope",
    "falconer_lower_bound",
    "sample_envelope_digits",
    "covering_statistics",
    "parse_nk_rule",
    "check_sparse_hypotheses",
]

LOG2 = math.log(2.0)

#: digit values are materialized as exact integers only below this
_EXACT_DIGIT_LIMIT_LOG = 50.0 * LOG2


def log_exp_diff(a: float, b: float) -> float:
    """log(e^a - e^b) for a > b, stable for both tiny and huge gaps."""
    if not a > b:
        raise DomainError("log_exp_diff needs a > b")
    return a + math.log1p(-math.exp(b - a))


def _hash_uniform(seed: int, index: int, lo: int, hi: int) -> int:
    """Deterministic stateless draw from {lo..hi} (bias is 2^-64 per value)."""
    v = mix64((seed ^ mix64((GOLDEN64 * (index + 1)) & MASK64)) & MASK64)
    return lo + v % (hi - lo + 1)


@dataclass(frozen=True)
class GrowthFunction:
    """A growth target phi with psi = log phi available in log space.

    Families: "sub_exponential" is phi(n) = e^(n^alpha), "super_exponential"
    is phi(n) = e^(alpha^n), "tabulated" carries explicit psi values for
    n = 1..len(table).
    """

    family: str
    alpha: float | None = None
    table: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.family == "sub_exponential":
            if self.alpha is None or not 0 < self.alpha:
                raise DomainError("sub_exponential needs alpha > 0")
        elif self.family == "super_exponential":
            if self.alpha is None or not self.alpha > 1:
                raise DomainError("super_exponential needs alpha > 1")
        elif self.family == "tabulated":
            if not self.table or len(self.table) < 2:
                raise DomainError("tabulated needs at least two psi values")
            for a, b in zip(self.table, self.table[1:]):
                if not b > a:
                    raise DomainError("tabulated psi values must be strictly increasing")
            if self.table[0] <= 0:
                raise DomainError("tabulated psi values must be positive (phi > 1)")
        else:
            raise DomainError(f"unknown growth family {self.family!r}")

    @classmethod
    def sub_exponential(cls, alpha: float) -> "GrowthFunction":
        return cls("sub_exponential", alpha=alpha)

    @classmethod
    def super_exponential(cls, alpha: float) -> "GrowthFunction":
        return cls("super_exponential", alpha=alpha)

    @classmethod
    def tabulated(cls, psi_values: Sequence[float]) -> "GrowthFunction":
        return cls("tabulated", table=tuple(float(v) for v in psi_values))

    def psi(self, n: int) -> float:
        if n < 1:
            raise DomainError("growth functions are indexed from n = 1")
        if self.family == "sub_exponential":
            return n ** self.alpha
        if self.family == "super_exponential":
            e = n * math.log(self.alpha)
            return math.inf if e > 709.0 else math.exp(e)
        if n > len(self.table):
            raise DomainError(f"tabulated growth has no entry for n = {n}")
        return self.table[n - 1]

    def psi_log(self, n: int) -> float:
        """log psi(n); finite even where psi itself overflows."""
        if n < 1:
            raise DomainError("growth functions are indexed from n = 1")
        if self.family == "sub_exponential":
            return self.alpha * math.log(n)
        if self.family == "super_exponential":
            return n * math.log(self.alpha)
        return math.log(self.psi(n))

    def phi(self, n: int) -> float:
        p = self.psi(n)
        return math.inf if p > 709.0 else math.exp(p)

    def increment(self, n: int) -> float:
        """psi(n) - psi(n-1), with psi(0) taken as 0."""
        if n == 1:
            return self.psi(1)
        return self.psi(n) - self.psi(n - 1)

    def psi_array(self, horizon: int) -> np.ndarray:
        """psi(1..horizon) as float64 (index 0 unused)."""
        out = np.empty(horizon + 1, dtype=np.float64)
        out[0] = np.nan
        n = np.arange(1, horizon + 1, dtype=np.float64)
        if self.family == "sub_exponential":
            out[1:] = n ** self.alpha
        elif self.family == "super_exponential":
            with np.errstate(over="ignore"):
                out[1:] = np.exp(n * math.log(self.alpha))
        else:
            if horizon > len(self.table):
                raise DomainError(f"tabulated growth has no entry for n = {horizon}")
            out[1 : horizon + 1] = self.table[:horizon]
        return out


def feasible_delta_interval(tau: float) -> tuple[float, float]:
    """Open interval of delta values satisfying (1 + 1/(1-delta))(1/2 - tau) < 1.

    Empty (hi <= 0) once tau leaves (0, 1/2).
    """
    u = 0.5 - tau
    if u <= 0:
        return (0.0, 1.0)  # condition holds for every delta in (0, 1)
    hi = (1.0 - 2.0 * u) / (1.0 - u)
    return (0.0, hi)


@dataclass(frozen=True)
class SparseSchedule:
    """Spike positions n_k, their prescribed digits, and the filler cap M."""

    phi: GrowthFunction
    M: int
    tau: float
    delta: float
    horizon: int
    n_seq: tuple[int, ...]
    digit_seq: tuple[int | None, ...]
    log_digit_seq: tuple[float, ...]
    exact_digits_until: int
    symbolic_tail_verified: bool

    def epsilon(self, k: int) -> float:
        if k < 1:
            raise DomainError("epsilon is indexed from k = 1")
        return float(k) ** (-self.delta)

    def r(self, n: int) -> int:
        """How many spike indices are <= n."""
        return bisect_right(self.n_seq, n)

    def classify(self, n: int) -> tuple[str, int]:
        """("spike", k) / ("neighbor", k) / ("filler", 0) for digit index n."""
        pos = bisect_right(self.n_seq, n)
        if pos and self.n_seq[pos - 1] == n:
            return ("spike", pos)
        if pos and self.n_seq[pos - 1] == n - 1:
            return ("neighbor", pos)
        if pos < len(self.n_seq) and self.n_seq[pos] == n + 1:
            return ("neighbor", pos + 1)
        return ("filler", 0)


def _validate_schedule_family(phi: GrowthFunction, tau: float) -> bool:
    """Returns True when the tail hypotheses are verified symbolically."""
    if phi.family == "super_exponential":
        raise DomainError("the spike construction needs phi(n+1)/phi(n) -> 1; the super_exponential family violates it")
    if phi.family == "sub_exponential":
        # limsup (log log phi)/(log n) = alpha must stay strictly below both
        # 1/2 and 1/2 - tau; the boundary alpha = 1/2 is refused outright
        if phi.alpha >= 0.5:
            raise DomainError("sub_exponential alpha must be < 1/2 for the spike construction")
        if phi.alpha >= 0.5 - tau:
            raise DomainError(f"tau = {tau:g} leaves no room above alpha = {phi.alpha:g}; need alpha < 1/2 - tau")
        if phi.alpha >= 1.0:
            raise DomainError("sub_exponential alpha must be < 1 so that phi(n+1)/phi(n) -> 1")
        return True
    return False  # tabulated: window checks only


def build_sparse_schedule(
    phi: GrowthFunction,
    M: int,
    tau: float,
    delta: Union[float, str] = "auto",
    horizon: int = 1_000_000,
) -> SparseSchedule:
    """Spike schedule: minimal n_k with spacing >= 4 and the growth ratio met.

    n_1 is the smallest index >= 3 from which psi(n) < n^(1/2 - tau) holds
    (checked on a window, with a symbolic tail argument for the built-in
    families); after that each n_k is the least index at distance >= 4
    satisfying phi(n_k) >= (1 + eps_{k-1}) phi(n_{k-1}), eps_k = k^-delta.
    Prescribed digits follow the halving formula that makes the spike
    contributions telescope.
    """
    if M < 1:
        raise DomainError("filler cap M must be >= 1")
    if not 0 < tau < 0.5:
        raise DomainError("tau must lie in (0, 1/2)")
    if horizon < 10:
        raise DomainError("horizon too small")
    symbolic = _validate_schedule_family(phi, tau)

    lo_d, hi_d = feasible_delta_interval(tau)
    if delta == "auto":
        if hi_d <= lo_d:
            raise DomainError(f"no feasible delta for tau = {tau:g}")
        delta_v = 0.5 * (lo_d + hi_d)
    else:
        delta_v = float(delta)
        if not 0 < delta_v < 1:
            raise DomainError("delta must lie in (0, 1)")
        if not lo_d < delta_v < hi_d:
            raise DomainError(
                f"delta = {delta_v:g} violates the spacing condition; feasible interval is ({lo_d:g}, {hi_d:g})"
            )

    exponent = 0.5 - tau
    n1 = None
    for n in range(3, min(horizon, 100_000) + 1):
        if phi.psi(n) < n ** exponent:
            n1 = n
            break
    if n1 is None:
        raise DomainError("no valid starting index n_1 within the horizon")
    window_end = min(10 * n1, horizon)
    for n in range(n1, window_end + 1):
        if not phi.psi(n) < n ** exponent:
            raise DomainError(f"psi(n) < n^(1/2 - tau) fails at n = {n} inside the verification window")

    n_seq = [n1]
    while True:
        k_prev = len(n_seq)  # the k of the last accepted spike
        target = phi.psi(n_seq[-1]) + math.log1p(float(k_prev) ** (-delta_v))
        lo = n_seq[-1] + 4
        if lo > horizon:
            break
        if phi.psi(lo) >= target:
            n_seq.append(lo)
            continue
        hi = lo
        while phi.psi(hi) < target:
            hi = min(2 * hi, horizon + 1)
            if hi > horizon:
                break
        if hi > horizon:
            break
        while lo < hi:
            mid = (lo + hi) // 2
            if phi.psi(mid) >= target:
                hi = mid
            else:
                lo = mid + 1
        n_seq.append(lo)

    # prescribed digits: log of the halved telescoping increment, exact
    # integers while they fit
    digit_seq: list[int | None] = []
    log_digit_seq: list[float] = []
    exact_until = 0
    prev_loaded = None  # log of (1 + eps_{k-1}) phi(n_{k-1})
    for k, nk in enumerate(n_seq, start=1):
        loaded = phi.psi(nk) + math.log1p(float(k) ** (-delta_v))
        if prev_loaded is None:
            log_half = loaded - LOG2
        else:
            log_half = log_exp_diff(loaded, prev_loaded) - LOG2
        prev_loaded = loaded
        log_digit_seq.append(log_half)
        if log_half < _EXACT_DIGIT_LIMIT_LOG:
            digit = int(math.floor(math.exp(log_half))) + 1
            digit_seq.append(digit)
            if exact_until == k - 1:
                exact_until = k
        else:
            digit_seq.append(None)

    return SparseSchedule(
        phi=phi,
        M=M,
        tau=tau,
        delta=delta_v,
        horizon=horizon,
        n_seq=tuple(n_seq),
        digit_seq=tuple(digit_seq),
        log_digit_seq=tuple(log_digit_seq),
        exact_digits_until=exact_until,
        symbolic_tail_verified=symbolic,
    )


@dataclass(frozen=True)
class ScheduledSample:
    """One sampled digit string from the spike construction, with its audit."""

    schedule: SparseSchedule
    seed: int
    digits: tuple[int, ...]
    rows: tuple[tuple[int, int, int, float, bool], ...]  # (k, n_k, S_{n_k}, target, ok)

    @property
    def all_ok(self) -> bool:
        return all(row[4] for row in self.rows)


def sample_scheduled_digits(schedule: SparseSchedule, seed: int, k_max: int) -> ScheduledSample:
    """Digits 1..n_{k_max}+1 with fillers drawn per-index, plus the S_{n_k} audit.

    Fillers are uniform on {1..M} via a stateless hash, spikes carry their
    prescribed digits, spike neighbors are pinned to 1.  The audit rows
    recompute S_{n_k} exactly from the emitted digits and compare against
    (1 + eps_k) phi(n_k).
    """
    if k_max < 1 or k_max > len(schedule.n_seq):
        raise DomainError(f"k_max must lie in 1..{len(schedule.n_seq)}")
    if k_max > schedule.exact_digits_until:
        raise ResourceError(
            f"prescribed digits are exact integers only up to k = {schedule.exact_digits_until}"
        )
    n_top = schedule.n_seq[k_max - 1] + 1
    digits = [0] * (n_top + 1)  # 1-based
    for n in range(1, n_top + 1):
        kind, k = schedule.classify(n)
        if kind == "spike" and k <= k_max:
            digits[n] = schedule.digit_seq[k - 1]
        elif kind == "neighbor":
            digits[n] = 1
        elif kind == "spike":
            digits[n] = 1  # beyond the audited range; keep the tail tame
        else:
            digits[n] = 1 if schedule.M == 1 else _hash_uniform(seed, n, 1, schedule.M)

    rows = []
    S = 0
    ki = 0
    for n in range(1, n_top):
        S += digits[n] * digits[n + 1]
        if ki < k_max and n == schedule.n_seq[ki]:
            ki += 1
            target = (1.0 + schedule.epsilon(ki)) * schedule.phi.phi(schedule.n_seq[ki - 1])
            rows.append((ki, n, S, target, float(S) >= target))
    return ScheduledSample(schedule, seed, tuple(digits[1:]), tuple(rows))


@dataclass(frozen=True)
class DigitEnvelope:
    """Digit ranges [d_n, (1+1/psi(n)) d_n] and their geometry, in log space.

    Arrays are 1-based (index 0 unused).  log_d runs to horizon + 1 so that
    level geometry at the horizon still has a child range to look at.
    lo/hi hold exact integer ranges where digits fit, -1 beyond that.
    log_gap[i] lower-bounds the gap between level-i intervals (level i uses
    digit indices N+1 .. N+i).
    """

    phi: GrowthFunction
    horizon: int
    N: int
    log_d: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    log_m: np.ndarray
    log_gap: np.ndarray
    widened: tuple[int, ...]
    exact_until: int

    @property
    def levels(self) -> int:
        return self.horizon - self.N

    def digit_range(self, n: int) -> tuple[int, int]:
        if not self.N < n <= self.horizon + 1:
            raise DomainError(f"digit ranges exist for n in ({self.N}, {self.horizon + 1}]")
        if self.lo[n] < 0:
            raise ResourceError(f"digit range at n = {n} does not fit an exact integer")
        return int(self.lo[n]), int(self.hi[n])

    def m_count(self, n: int) -> int:
        lo, hi = self.digit_range(n)
        return hi - lo + 1


def build_digit_envelope(phi: GrowthFunction, horizon: int) -> DigitEnvelope:
    """Run the pair recurrence d_n d_{n+1} = phi(n) - phi(n-1) in log space.

    d_1 = 1 and d_2 = phi(1).  N is the last index where the viability
    conditions (d_n >= 2 and d_n >= 2 psi(n)) fail; ranges are materialized
    for every later index.  Raises if the horizon ends before the
    conditions settle.
    """
    if horizon < 4:
        raise DomainError("horizon must be >= 4")
    top = horizon + 1
    psi = phi.psi_array(top)
    if not np.all(np.isfinite(psi[1:])):
        bad = int(np.argmin(np.isfinite(psi[1:]))) + 1
        raise ResourceError(f"psi overflows float64 at n = {bad}; reduce the horizon")
    for n in range(2, top + 1):
        if not psi[n] > psi[n - 1]:
            raise DomainError(f"phi must be strictly increasing; fails at n = {n}")

    log_d = np.empty(top + 1, dtype=np.float64)
    log_d[0] = np.nan
    log_d[1] = 0.0
    log_d[2] = psi[1]
    for n in range(2, top):
        log_d[n + 1] = log_exp_diff(psi[n], psi[n - 1]) - log_d[n]

    N = 0
    for n in range(1, horizon + 1):
        if not (log_d[n] >= LOG2 and log_d[n] >= math.log(2.0 * psi[n])):
            N = n
    if N >= horizon - 2:
        raise ResourceError(f"viability conditions still failing at n = {N}; enlarge the horizon past {horizon}")

    lo = np.full(top + 1, -1, dtype=np.int64)
    hi = np.full(top + 1, -1, dtype=np.int64)
    log_m = np.full(top + 1, np.nan, dtype=np.float64)
    widened: list[int] = []
    exact_until = N
    for n in range(N + 1, top + 1):
        ld = log_d[n]
        if ld < _EXACT_DIGIT_LIMIT_LOG:
            d = math.exp(ld)
            a = math.ceil(d)
            b = math.floor((1.0 + 1.0 / psi[n]) * d)
            if b < a:
                b = a + 1
                widened.append(n)
            lo[n] = a
            hi[n] = b
            log_m[n] = math.log(b - a + 1)
            if exact_until == n - 1:
                exact_until = n
        else:
            # the range holds about d/psi integers; at this size the ±1
            # endpoint effects are far below float resolution
            log_m[n] = ld - math.log(psi[n])

    levels = horizon - N
    log_gap = np.full(levels + 1, np.nan, dtype=np.float64)
    acc = 0.0
    for i in range(1, levels + 1):
        n = N + i
        acc += 2.0 * (log_d[n] + math.log1p(1.0 / psi[n]))
        log_gap[i] = -2.0 * (N + i + 2) * LOG2 - acc

    return DigitEnvelope(
        phi=phi,
        horizon=horizon,
        N=N,
        log_d=log_d,
        lo=lo,
        hi=hi,
        log_m=log_m,
        log_gap=log_gap,
        widened=tuple(widened),
        exact_until=exact_until,
    )


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    method: str  # "falconer" or "covering_slope"
    horizon: int
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise DomainError("dimension estimates live in [0, 1]")


def falconer_lower_bound(
    m_log_seq: Sequence[float] | None = None,
    gap_log_seq: Sequence[float] | None = None,
    psi: Union[GrowthFunction, Callable[[int], float], None] = None,
    horizon: int | None = None,
) -> DimensionEstimate:
    """Nested-interval dimension lower bound, evaluated at the horizon.

    Either pass per-level interval counts and gap lower bounds (as logs),
    or pass psi directly to use the closed-form ratio
    sum_{k<n} psi(k) / (psi(n) + 2 sum_{k<n} psi(k)).  Diagnostics cover
    the trailing 10% of levels so a drifting ratio is visible.
    """
    if (psi is None) == (m_log_seq is None):
        raise DomainError("pass either (m_log_seq, gap_log_seq) or psi, not both")

    if psi is not None:
        if horizon is None or horizon < 3:
            raise DomainError("psi mode needs a horizon >= 3")
        if isinstance(psi, GrowthFunction):
            vals = psi.psi_array(horizon)[1:]
        else:
            vals = np.fromiter((float(psi(n)) for n in range(1, horizon + 1)), dtype=np.float64, count=horizon)
        if not np.all(np.isfinite(vals)):
            raise DomainError("psi overflows a float inside the horizon; use a smaller horizon or the log-space mesh mode")
        if np.any(vals <= 0):
            raise DomainError("psi must be positive")
        sums = np.cumsum(vals)
        # ratio at n uses psi(n) and the sum through n-1
        ratios = sums[:-1] / (vals[1:] + 2.0 * sums[:-1])
        raw = float(ratios[-1])
        tail = ratios[-max(2, len(ratios) // 10):]
        method_detail = "psi_closed_form"
    else:
        if gap_log_seq is None:
            raise DomainError("mesh mode needs both m_log_seq and gap_log_seq")
        m_log = np.asarray(m_log_seq, dtype=np.float64)
        g_log = np.asarray(gap_log_seq, dtype=np.float64)
        if m_log.shape != g_log.shape or m_log.ndim != 1 or len(m_log) < 2:
            raise DomainError("m_log_seq and gap_log_seq must be equal-length 1-d sequences, length >= 2")
        if np.any(m_log < LOG2 - 1e-9):
            raise DomainError("every level must carry at least 2 intervals (m_n >= 2)")
        if np.any(np.diff(g_log) >= 1e-12):
            raise DomainError("gap lower bounds must decrease")
        sums = np.cumsum(m_log)
        denom = -(m_log[1:] + g_log[1:])
        if np.any(denom <= 0):
            raise DomainError("gaps are too large for the bound to make sense (need m_n * gap_n < 1)")
        ratios = sums[:-1] / denom
        raw = float(ratios[-1])
        tail = ratios[-max(2, len(ratios) // 10):]
        method_detail = "mesh"
        horizon = len(m_log)

    value = min(max(raw, 0.0), 1.0)
    diags = {
        "mode": method_detail,
        "raw_value": raw,
        "tail_min": float(np.min(tail)),
        "tail_max": float(np.max(tail)),
        "tail_spread": float(np.max(tail) - np.min(tail)),
    }
    return DimensionEstimate(value, "falconer", int(horizon), diags)


@dataclass(frozen=True)
class EnvelopeSample:
    """One sampled digit string from the envelope, with S_n/phi(n) tracking."""

    envelope: DigitEnvelope
    seed: int
    digits: tuple[int, ...]
    rows: tuple[tuple[int, float, float], ...]  # (n, ratio, deviation)
    in_range: bool

    def deviation_at(self, n: int) -> float:
        for row in self.rows:
            if row[0] == n:
                return row[2]
        raise DomainError(f"n = {n} is not on the sample grid")


def sample_envelope_digits(
    envelope: DigitEnvelope,
    seed: int,
    n_max: int | None = None,
    grid: Sequence[int] | None = None,
) -> EnvelopeSample:
    """Draw each digit uniformly from its envelope range and track S_n/phi(n).

    Needs exact integer ranges up to n_max + 1.  The default grid is
    geometric between the first free index and n_max, always including the
    two decades below n_max so deviation trends can be read off.
    """
    if n_max is None:
        n_max = min(envelope.horizon, envelope.exact_until) - 1
    if n_max + 1 > envelope.exact_until:
        raise ResourceError(
            f"need exact digit ranges through n = {n_max + 1}, available only to {envelope.exact_until}"
        )
    N = envelope.N
    if n_max <= N + 1:
        raise DomainError("n_max must exceed N + 1")
    if grid is None:
        pts = {n_max, max(N + 1, n_max // 10), max(N + 1, n_max // 100)}
        g = float(N + 1)
        while g < n_max:
            pts.add(int(round(g)))
            g *= 1.5
        grid = sorted(p for p in pts if N < p <= n_max)
    else:
        grid = sorted(set(int(g) for g in grid))
        if grid and (grid[0] <= N or grid[-1] > n_max):
            raise DomainError("grid points must lie in (N, n_max]")

    digits = [0] * (n_max + 2)  # 1-based
    in_range = True
    for n in range(1, n_max + 2):
        if n <= N:
            digits[n] = 1
        else:
            a, b = envelope.digit_range(n)
            digits[n] = _hash_uniform(seed, n, a, b)
            if not a <= digits[n] <= b:
                in_range = False

    rows = []
    S = 0
    gi = 0
    for n in range(1, n_max + 1):
        S += digits[n] * digits[n + 1]
        if gi < len(grid) and n == grid[gi]:
            gi += 1
            ratio = float(S) / envelope.phi.phi(n)
            rows.append((n, ratio, abs(ratio - 1.0)))
    return EnvelopeSample(envelope, seed, tuple(digits[1:]), tuple(rows), in_range)


@dataclass(frozen=True)
class CoveringStats:
    """Interval count and rigorous length bounds at one construction level."""

    level: int
    log_count: float
    log_len_min: float
    log_len_max: float

    def slope_estimate(self) -> DimensionEstimate:
        raw = self.log_count / (-self.log_len_max)
        return DimensionEstimate(
            min(max(raw, 0.0), 1.0),
            "covering_slope",
            self.level,
            {"raw_value": raw, "log_count": self.log_count, "log_len_max": self.log_len_max, "log_len_min": self.log_len_min},
        )


def covering_statistics(obj: Union[DigitEnvelope, SparseSchedule], level: int) -> CoveringStats:
    """Count and measure the level-`level` construction intervals.

    For an envelope, level i fixes digit indices through N + i; each branch
    interval spans the child digit range at N + i + 1, giving length
    span * theta * |cylinder| with theta in [1/2, 2].  For a schedule,
    level n fixes digits 1..n and whole cylinders are counted.
    """
    if isinstance(obj, DigitEnvelope):
        if not 1 <= level <= obj.levels:
            raise DomainError(f"level must lie in 1..{obj.levels}")
        N = obj.N
        idx = np.arange(N + 1, N + level + 1)
        log_count = float(np.sum(obj.log_m[idx]))
        psi_next = obj.phi.psi(N + level + 1)
        # child-range span in tail coordinates: 1/lo - 1/(hi+1)
        n_child = N + level + 1
        if obj.lo[n_child] >= 0:
            lo_c, hi_c = int(obj.lo[n_child]), int(obj.hi[n_child])
            log_dy = math.log(hi_c + 1 - lo_c) - math.log(lo_c) - math.log(hi_c + 1)
        else:
            ld = float(obj.log_d[n_child])
            log_dy = -ld - math.log(psi_next) - math.log1p(1.0 / psi_next)
        # digit products over the fixed indices, smallest and largest choices
        sum_lo = 0.0
        sum_hi = 0.0
        for n in range(N + 1, N + level + 1):
            if obj.lo[n] >= 0:
                sum_lo += math.log(float(obj.lo[n]))
                sum_hi += math.log(float(obj.hi[n]))
            else:
                ld = float(obj.log_d[n])
                sum_lo += ld
                sum_hi += ld + math.log1p(1.0 / obj.phi.psi(n))
        L = N + level
        log_len_max = log_dy + LOG2 - 2.0 * sum_lo
        log_len_min = log_dy - LOG2 - (2 * L + 1) * LOG2 - 2.0 * sum_hi
        return CoveringStats(level, log_count, log_len_min, log_len_max)

    if isinstance(obj, SparseSchedule):
        if level < 1:
            raise DomainError("level must be >= 1")
        spikes = [k for k, nk in enumerate(obj.n_seq, start=1) if nk <= level]
        neighbors = sum(
            1
            for n in range(1, level + 1)
            if obj.classify(n)[0] == "neighbor"
        )
        fillers = level - len(spikes) - neighbors
        log_count = fillers * math.log(obj.M) if obj.M > 1 else 0.0
        sum_spike = sum(obj.log_digit_seq[k - 1] for k in spikes)
        log_len_max = -2.0 * sum_spike
        log_len_min = -(2 * level + 1) * LOG2 - 2.0 * (sum_spike + fillers * math.log(max(obj.M, 1)))
        return CoveringStats(level, log_count, log_len_min, log_len_max)

    raise DomainError("covering_statistics needs a DigitEnvelope or a SparseSchedule")


def parse_nk_rule(rule: str, phi: GrowthFunction) -> tuple[Callable[[int], int], str]:
    """Spike-index rules: "auto", "k", "k^P" (P >= 1), or "C*k" (integer C)."""
    rule = rule.strip()
    if rule == "auto":
        if phi.family == "sub_exponential":
            P = 1.0 / phi.alpha
            return (lambda k: math.floor(k ** P)), f"k^{P:g}"
        if phi.family == "super_exponential":
            return (lambda k: 2 * k), "2*k"
        raise DomainError("auto spike rule needs a parametric growth family")
    if rule == "k":
        return (lambda k: k), "k"
    if rule.startswith("k^"):
        P = float(rule[2:])
        if P < 1.0:
            raise DomainError("k^P rules need P >= 1 so the indices increase")
        return (lambda k: math.floor(k ** P)), rule
    if rule.endswith("*k"):
        C = int(rule[:-2])
        if C < 1:
            raise DomainError("C*k rules need C >= 1")
        return (lambda k: C * k), rule
    raise DomainError(f"cannot parse spike rule {rule!r}; use auto, k, k^P, or C*k")


@dataclass(frozen=True)
class SparseHypothesesReport:
    """Did the spike sequence satisfy the dimension-formula hypotheses?"""

    M_value: float
    zeta_value: float
    log_c_epsilon: float
    s: float
    epsilon: float
    rule: str
    horizon: int
    k_count: int
    gap_violations: int
    established: bool
    first_k: int | None
    min_tail_psi_gap: float
    rows: tuple[tuple[int, int, int, bool, bool], ...]  # (k, n_k, gap, gap_ok, ratio_ok)


def check_sparse_hypotheses(
    phi: GrowthFunction,
    nk_rule: str,
    s: float,
    epsilon: float,
    horizon: int,
) -> SparseHypothesesReport:
    """Check spacing and growth-rate hypotheses against the explicit constant.

    The constant is M = (2s - 1 - eps)^-1 log(c_eps * 4.5 * (2 + zeta(2s - eps)))
    with c_eps the constructive divisor-bound constant.  Hypotheses, per
    spike index k: n_k - n_{k-1} >= 2, and psi(n_k) >= M * (n_k - n_{k-1});
    both must hold from some k on through the horizon.  Failure to
    establish them is reported, not raised.
    """
    if not 0.5 < s < 1.0:
        raise DomainError("s must lie in (1/2, 1)")
    if not 0 < epsilon < 2.0 * s - 1.0:
        raise DomainError("epsilon must lie in (0, 2s - 1)")
    if horizon < 4:
        raise DomainError("horizon too small")

    bound = constructive_c_epsilon(epsilon)
    log_c = bound.M * bound.l0 * LOG2
    z = zeta(2.0 * s - epsilon)
    M_value = (log_c + math.log(4.5 * (2.0 + z))) / (2.0 * s - 1.0 - epsilon)
    log_M = math.log(M_value)

    rule_fn, rule_desc = parse_nk_rule(nk_rule, phi)
    n_seq = []
    k = 1
    while True:
        nk = rule_fn(k)
        if nk > horizon:
            break
        if nk < 1:
            raise DomainError(f"spike rule produced n_{k} = {nk} < 1")
        n_seq.append(nk)
        k += 1
        if k > 10_000_000:
            raise ResourceError("spike rule generated over 1e7 indices")

    rows = []
    gap_violations = 0
    ok_flags = []
    for i in range(1, len(n_seq)):
        nk, nprev = n_seq[i], n_seq[i - 1]
        gap = nk - nprev
        gap_ok = gap >= 2
        if not gap_ok:
            gap_violations += 1
        ratio_ok = phi.psi_log(nk) >= log_M + math.log(max(gap, 1))
        rows.append((i + 1, nk, gap, gap_ok, ratio_ok))
        ok_flags.append(gap_ok and ratio_ok)

    established = False
    first_k = None
    if ok_flags and ok_flags[-1]:
        j = len(ok_flags) - 1
        while j >= 0 and ok_flags[j]:
            j -= 1
        established = True
        first_k = rows[j + 1][0]

    # quantify liminf psi(n_k) - psi(n_{k-1}+1) over the established tail
    min_gap = math.inf
    if established:
        for i in range(first_k - 2, len(n_seq) - 1):
            a = phi.psi_log(n_seq[i + 1])
            b = phi.psi_log(n_seq[i] + 1)
            if a <= b:
                min_gap = 0.0
                break
            dlog = log_exp_diff(a, b)
            min_gap = min(min_gap, math.exp(dlog) if dlog < 700.0 else math.inf)
    if not established or min_gap <= 0.0:
        established = established and min_gap > 0.0
        if not established:
            first_k = None

    return SparseHypothesesReport(
        M_value=M_value,
        zeta_value=z,
        log_c_epsilon=log_c,
        s=s,
        epsilon=epsilon,
        rule=rule_desc,
        horizon=horizon,
        k_count=len(n_seq),
        gap_violations=gap_violations,
        established=established,
        first_k=first_k,
        min_tail_psi_gap=min_gap if min_gap != math.inf else math.inf,
        rows=tuple(rows),
    )
