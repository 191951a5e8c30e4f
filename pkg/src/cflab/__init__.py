"""Continued-fraction digit statistics.

Exact expansion and cylinder machinery, exact interval measures for the
digit law, Monte Carlo experiments for the limit laws of the pair sum
S_n = sum a_i a_{i+1}, divisor-function and composition-sum support, and
Cantor constructions with prescribed pair-sum growth.
"""

from ._backend import backend_name
from .arith import (
    CompositionQuery,
    CompositionResult,
    ConstructiveDivisorBound,
    Factorization,
    composition_sum,
    constructive_c_epsilon,
    divisor_bound_scan,
    divisor_count,
    divisor_counts_upto,
    factorize,
    zeta,
    zeta_direct_bounds,
)
from .cf_core import (
    Convergent,
    CylinderInterval,
    DigitSequence,
    RandomRealStream,
    convergents,
    cylinder,
    digit_stream,
    expand_rational,
    next_digit,
    shift,
    value,
)
from .errors import DomainError, PropertyViolation, ResourceError
from .fractal import (
    CoveringStats,
    DigitEnvelope,
    DimensionEstimate,
    GrowthFunction,
    ScheduledSample,
    SparseHypothesesReport,
    SparseSchedule,
    build_digit_envelope,
    build_sparse_schedule,
    check_sparse_hypotheses,
    covering_statistics,
    falconer_lower_bound,
    feasible_delta_interval,
    sample_envelope_digits,
    sample_scheduled_digits,
)
from .measure import (
    Interval,
    IntervalUnion,
    MeasureValue,
    asymptotic_product_measure,
    correlation_ratio,
    gauss,
    lebesgue,
    pair_cylinder_measure,
    product_set,
    truncated_pair_expectation,
)
from .sums import (
    DIGIT_SUM_LIMIT,
    PAIR_SUM_LIMIT,
    ExperimentConfig,
    ExperimentReport,
    TrajectoryStats,
    baseline_experiments,
    running_max_statistic,
    trajectory_stats,
    trimmed_law_experiment,
    truncated_sum,
    weak_law_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "CompositionQuery",
    "CompositionResult",
    "ConstructiveDivisorBound",
    "Convergent",
    "CoveringStats",
    "CylinderInterval",
    "DIGIT_SUM_LIMIT",
    "DigitEnvelope",
    "DigitSequence",
    "DimensionEstimate",
    "DomainError",
    "ExperimentConfig",
    "ExperimentReport",
    "Factorization",
    "GrowthFunction",
    "Interval",
    "IntervalUnion",
    "MeasureValue",
    "PAIR_SUM_LIMIT",
    "PropertyViolation",
    "RandomRealStream",
    "ResourceError",
    "ScheduledSample",
    "SparseHypothesesReport",
    "SparseSchedule",
    "TrajectoryStats",
    "asymptotic_product_measure",
    "backend_name",
    "baseline_experiments",
    "build_digit_envelope",
    "build_sparse_schedule",
    "check_sparse_hypotheses",
    "composition_sum",
    "constructive_c_epsilon",
    "convergents",
    "correlation_ratio",
    "covering_statistics",
    "cylinder",
    "digit_stream",
    "divisor_bound_scan",
    "divisor_count",
    "divisor_counts_upto",
    "expand_rational",
    "factorize",
    "falconer_lower_bound",
    "feasible_delta_interval",
    "gauss",
    "lebesgue",
    "next_digit",
    "pair_cylinder_measure",
    "product_set",
    "running_max_statistic",
    "sample_envelope_digits",
    "sample_scheduled_digits",
    "shift",
    "trajectory_stats",
    "trimmed_law_experiment",
    "truncated_pair_expectation",
    "truncated_sum",
    "value",
    "weak_law_experiment",
    "zeta",
    "zeta_direct_bounds",
]
