"""Trajectory statistics, trimming and truncation, experiment reports."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cflab._bits import trial_seed
from cflab._kernels import generate_digits
from cflab.cf_core import RandomRealStream
from cflab.errors import DomainError
from cflab.sums import (
    DIGIT_SUM_LIMIT,
    PAIR_SUM_LIMIT,
    ExperimentConfig,
    ExperimentReport,
    TrajectoryRow,
    baseline_experiments,
    pair_threshold,
    running_max_statistic,
    trajectory_stats,
    trimmed_law_experiment,
    truncated_sum,
    weak_law_experiment,
)
from cflab.sums import _stats_exact


def _expected_row(digits, n, exponent=1.625) -> TrajectoryRow:
    """Independent plain-Python recomputation of one grid row."""
    b = [digits[i] * digits[i + 1] for i in range(n)]
    thr = pair_threshold(n, exponent)
    pw = math.floor(float(n) ** 1.6)
    over = [v for v in b if v > thr]
    mx = max(b)
    dmx = max(digits[:n])
    return TrajectoryRow(
        n=n,
        pair_sum=sum(b),
        digit_sum=sum(digits[:n]),
        trimmed_sum=sum(b) - mx,
        truncated_sum=sum(b) - sum(over),
        threshold=thr,
        over_threshold=len(over),
        over_power=sum(1 for v in b if v > pw),
        max_pair=mx,
        max_pair_index=b.index(mx) + 1,
        max_digit=dmx,
        max_digit_index=list(digits[:n]).index(dmx) + 1,
    )


class TestLimitsAndThreshold:
    def test_limit_constants(self):
        assert PAIR_SUM_LIMIT == 1.0 / (2.0 * math.log(2.0))
        assert DIGIT_SUM_LIMIT == 1.0 / math.log(2.0)

    def test_threshold_values(self):
        assert pair_threshold(100_000, 1.625) == 5_301_841
        assert pair_threshold(3, 1.625) == 3
        assert pair_threshold(2, 1.625) == 1

    def test_threshold_validation(self):
        with pytest.raises(DomainError):
            pair_threshold(1, 1.625)


class TestTrajectoryStats:
    def test_small_known_trajectory(self):
        row = trajectory_stats([1, 2, 3, 1], [3]).rows[0]
        assert row == TrajectoryRow(
            n=3,
            pair_sum=11,
            digit_sum=6,
            trimmed_sum=5,
            truncated_sum=5,
            threshold=3,
            over_threshold=1,
            over_power=1,
            max_pair=6,
            max_pair_index=2,
            max_digit=3,
            max_digit_index=3,
        )

    def test_all_ones(self):
        stats = trajectory_stats([1] * 11, [2, 5, 10])
        for row in stats.rows:
            assert row.pair_sum == row.n
            assert row.digit_sum == row.n
            assert row.trimmed_sum == row.n - 1
            assert row.truncated_sum == row.n  # no pair exceeds any threshold
            assert row.over_threshold == 0
            assert row.max_pair == 1
            assert row.max_pair_index == 1

    def test_tie_takes_first_index(self):
        row = trajectory_stats([2, 3, 2, 3, 2], [4]).rows[0]
        assert row.max_pair == 6
        assert row.max_pair_index == 1
        assert row.max_digit == 3
        assert row.max_digit_index == 2

    def test_matches_reference_on_streams(self):
        for law in ("lebesgue", "gauss"):
            for t in range(10):
                d = generate_digits(trial_seed(7, t), law, 301)
                stats = trajectory_stats(d, [10, 100, 300])
                for row in stats.rows:
                    assert row == _expected_row([int(x) for x in d], row.n)

    def test_over_count_trichotomy(self):
        checked = {0: 0, 1: 0, 2: 0}
        for t in range(60):
            d = generate_digits(trial_seed(11, t), "lebesgue", 501)
            for row in trajectory_stats(d, [50, 500]).rows:
                if row.over_threshold == 0:
                    assert row.truncated_sum == row.pair_sum
                    checked[0] += 1
                elif row.over_threshold == 1:
                    # the lone term above the threshold is the maximum
                    assert row.trimmed_sum == row.truncated_sum
                    assert row.max_pair > row.threshold
                    checked[1] += 1
                else:
                    assert row.truncated_sum < row.trimmed_sum
                    checked[2] += 1
                assert (row.over_threshold >= 1) == (row.max_pair > row.threshold)
        assert all(v > 0 for v in checked.values()), checked

    def test_exact_path_equals_vector_path(self):
        d = generate_digits(trial_seed(3, 0), "gauss", 201)
        grid = [10, 50, 200]
        vec = trajectory_stats(d, grid).rows
        exact = _stats_exact(d, grid, 1.625)
        assert list(vec) == exact

    def test_huge_digit_routes_to_exact_path(self):
        d = [2, 5, 1, 3, 1 << 40, 2, 4, 1, 1, 6, 2]
        stats = trajectory_stats(d, [4, 10])
        for row in stats.rows:
            assert row == _expected_row(d, row.n)
        assert stats.rows[1].max_pair == 3 * (1 << 40)

    @settings(deadline=None, max_examples=60)
    @given(st.lists(st.integers(1, 1 << 35), min_size=6, max_size=24))
    def test_paths_agree(self, digits):
        grid = [2, len(digits) - 1]
        arr = np.array(digits, dtype=object)
        exact = _stats_exact(arr, sorted(set(grid)), 1.625)
        public = trajectory_stats(digits, grid).rows
        assert list(public) == exact

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            trajectory_stats([1, 2, 3], [])
        with pytest.raises(DomainError):
            trajectory_stats([1, 2, 3], [1])
        with pytest.raises(DomainError):
            trajectory_stats([1, 2], [5])  # not enough digits
        with pytest.raises(DomainError):
            trajectory_stats(np.array([1.5, 2.5, 3.5]), [2])

    def test_row_lookup(self):
        stats = trajectory_stats([1, 2, 3, 1, 2, 2], [2, 5])
        assert stats.row_for(5).n == 5
        with pytest.raises(DomainError):
            stats.row_for(3)

    def test_stream_source_equals_array_source(self):
        digits = RandomRealStream(41, "gauss").take(61)
        from_stream = trajectory_stats(RandomRealStream(41, "gauss"), [20, 60])
        from_array = trajectory_stats(list(digits), [20, 60])
        assert from_stream.rows == from_array.rows


class TestTruncatedSum:
    def test_consistent_with_rows(self):
        d = generate_digits(trial_seed(5, 2), "lebesgue", 301)
        assert truncated_sum(d, 300) == trajectory_stats(d, [300]).rows[0].truncated_sum
        assert truncated_sum(d, 300, exponent=2.0) == (
            trajectory_stats(d, [300], truncation_exponent=2.0).rows[0].truncated_sum
        )

    def test_validation(self):
        with pytest.raises(DomainError):
            truncated_sum([1, 2, 3], 1)


class TestRunningMax:
    def test_formula(self):
        d = [3, 1, 4, 1, 5, 9, 2, 6]
        vals = running_max_statistic(d, [3, 5, 7])
        b = [d[i] * d[i + 1] for i in range(7)]
        for v, n in zip(vals, (3, 5, 7)):
            expected = max(b[:n]) / (n * math.log(n) / math.log(math.log(n)))
            assert v == pytest.approx(expected, rel=1e-15)

    def test_grid_floor(self):
        with pytest.raises(DomainError):
            running_max_statistic([1, 2, 3, 4], [2, 3])


class TestSeeds:
    def test_trial_seed_reimplementation(self):
        GOLD = 0x9E3779B97F4A7C15
        M1 = 0xBF58476D1CE4E5B9
        M2 = 0x94D049BB133111EB
        mask = (1 << 64) - 1

        def mix(z):
            z &= mask
            z = ((z ^ (z >> 30)) * M1) & mask
            z = ((z ^ (z >> 27)) * M2) & mask
            return z ^ (z >> 31)

        for master in (0, 1, 2026, 2**63):
            for i in (0, 1, 5, 999):
                assert trial_seed(master, i) == mix(master ^ mix((GOLD * (i + 1)) & mask))

    def test_trial_seeds_distinct(self):
        seeds = {trial_seed(2026, i) for i in range(1000)}
        assert len(seeds) == 1000


class TestExperimentConfig:
    def test_validation(self):
        good = dict(law="lebesgue", trials=2, n_grid=(10, 20), master_seed=1)
        ExperimentConfig(**good)
        with pytest.raises(DomainError):
            ExperimentConfig(**{**good, "law": "uniform"})
        with pytest.raises(DomainError):
            ExperimentConfig(**{**good, "trials": 0})
        with pytest.raises(DomainError):
            ExperimentConfig(**{**good, "n_grid": (20, 10)})
        with pytest.raises(DomainError):
            ExperimentConfig(**{**good, "n_grid": (1, 10)})
        with pytest.raises(DomainError):
            ExperimentConfig(**{**good, "n_grid": ()})
        with pytest.raises(DomainError):
            ExperimentConfig(**{**good, "master_seed": -1})
        with pytest.raises(DomainError):
            ExperimentConfig(**{**good, "epsilon": 0.0})
        with pytest.raises(DomainError):
            ExperimentConfig(**{**good, "truncation_exponent": 1.0})
        with pytest.raises(DomainError):
            ExperimentConfig(**{**good, "truncation_exponent": 3.0})

    def test_threads_outside_identity(self):
        a = ExperimentConfig("gauss", 3, (10,), 7, threads=1)
        b = ExperimentConfig("gauss", 3, (10,), 7, threads=8)
        assert a.serializable() == b.serializable()
        assert "threads" not in a.serializable()


class TestReports:
    CFG = ExperimentConfig("lebesgue", trials=8, n_grid=(50, 100), master_seed=1)

    def test_weak_law_shape(self):
        rep = weak_law_experiment(self.CFG)
        stats = {r["statistic"] for r in rep.rows}
        assert stats == {"pair_sum_ratio_mean", "pair_sum_ratio_median", "exceedance_frac"}
        assert {r["n"] for r in rep.rows} == {50, 100}
        assert len(rep.rows) == 6
        for r in rep.rows:
            assert set(r) >= {"statistic", "n", "value"}
            if r["statistic"].startswith("pair_sum_ratio"):
                assert r["target"] == pytest.approx(PAIR_SUM_LIMIT)

    def test_trimmed_law_shape(self):
        rep = trimmed_law_experiment(self.CFG)
        stats = {r["statistic"] for r in rep.rows}
        assert stats == {
            "truncated_sum_mean",
            "truncation_threshold",
            "trimmed_ratio_mean",
            "mismatch_multi_frac",
            "over_threshold_mean",
        }
        thr = {r["n"]: r["value"] for r in rep.rows if r["statistic"] == "truncation_threshold"}
        assert thr == {50: pair_threshold(50, 1.625), 100: pair_threshold(100, 1.625)}

    def test_baselines_shape(self):
        rep = baseline_experiments(self.CFG)
        stats = {r["statistic"] for r in rep.rows}
        assert stats == {
            "digit_sum_ratio_mean",
            "digit_sum_ratio_median",
            "trimmed_digit_ratio_mean",
            "max_digit_share_mean",
        }
        for r in rep.rows:
            if r["statistic"] == "trimmed_digit_ratio_mean":
                assert r["target"] == pytest.approx(DIGIT_SUM_LIMIT)

    def test_csv_round_trip(self):
        rep = weak_law_experiment(self.CFG)
        text = rep.to_csv_text()
        lines = text.strip().split("\n")
        assert lines[0] == "statistic,n,value,stderr,target,note"
        assert len(lines) == 1 + len(rep.rows)
        assert text.endswith("\n")

    def test_json_payload(self):
        rep = weak_law_experiment(self.CFG)
        payload = json.loads(rep.to_json_text())
        assert payload["kind"] == rep.kind
        assert payload["config"] == self.CFG.serializable()
        assert payload["config_sha256"] == rep.config_sha256()
        assert len(payload["rows"]) == len(rep.rows)
        assert "threads" not in payload["config"]

    def test_thread_count_does_not_change_results(self):
        base = dict(law="gauss", trials=6, n_grid=(40, 80), master_seed=9)
        one = weak_law_experiment(ExperimentConfig(**base, threads=1))
        many = weak_law_experiment(ExperimentConfig(**base, threads=4))
        assert one.to_csv_text() == many.to_csv_text()
        assert one.to_json_text() == many.to_json_text()

    def test_reruns_identical(self):
        a = trimmed_law_experiment(self.CFG).to_csv_text()
        b = trimmed_law_experiment(self.CFG).to_csv_text()
        assert a == b

    def test_different_seeds_differ(self):
        other = ExperimentConfig("lebesgue", trials=8, n_grid=(50, 100), master_seed=2)
        assert weak_law_experiment(self.CFG).to_csv_text() != weak_law_experiment(other).to_csv_text()
