"""Numba and numpy paths produce the same numbers.

Digit generation and the divisor sieve are exact integer algorithms, so the
two backends must match bit for bit; the floating-point kernels use
different summation orders and agree to roundoff.  The fallback runs in a
subprocess with CFLAB_BACKEND=numpy since the choice is per-process.
"""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from cflab._backend import backend_name, resolve_threads
from cflab._bits import trial_seed
from cflab._kernels import (
    composition_power_sum,
    divisor_sieve,
    generate_digits,
    pair_expectation_sum,
)
from cflab._tailchain import chain_digits

_PROBE = r"""
import hashlib, json, sys
from cflab._backend import backend_name
from cflab._bits import trial_seed
from cflab._kernels import (composition_power_sum, divisor_sieve,
                            generate_digits, pair_expectation_sum)
from cflab.sums import ExperimentConfig, weak_law_experiment

out = {"backend": backend_name()}
out["digits"] = {
    f"{law}/{seed}": generate_digits(seed, law, 400).tolist()
    for law in ("lebesgue", "gauss")
    for seed in (1, trial_seed(2026, 0), 2**63 + 11)
}
out["sieve_sha"] = hashlib.sha256(divisor_sieve(50_000).tobytes()).hexdigest()
out["pair_expectation"] = {str(t): pair_expectation_sum(float(t)) for t in (1, 2, 1000, 123456)}
out["composition"] = composition_power_sum(4, 30, 1.5)
cfg = ExperimentConfig("gauss", trials=5, n_grid=(50, 200), master_seed=77)
out["weak_law_csv"] = weak_law_experiment(cfg).to_csv_text()
json.dump(out, sys.stdout)
"""


@pytest.fixture(scope="module")
def fallback():
    env = dict(os.environ, CFLAB_BACKEND="numpy")
    proc = subprocess.run(
        [sys.executable, "-c", _PROBE], capture_output=True, text=True, env=env, timeout=300
    )
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout)


class TestBackendParity:
    def test_fallback_really_is_numpy(self, fallback):
        assert fallback["backend"] == "numpy"
        assert backend_name() in ("numba", "numpy")

    def test_digit_arrays_identical(self, fallback):
        for key, their in fallback["digits"].items():
            law, seed = key.split("/")
            mine = generate_digits(int(seed), law, 400)
            assert mine.tolist() == their, key

    def test_divisor_sieve_identical(self, fallback):
        import hashlib

        mine = hashlib.sha256(divisor_sieve(50_000).tobytes()).hexdigest()
        assert mine == fallback["sieve_sha"]

    def test_pair_expectation_to_roundoff(self, fallback):
        for t, their in fallback["pair_expectation"].items():
            mine = pair_expectation_sum(float(int(t)))
            assert mine == pytest.approx(their, rel=1e-13), t

    def test_composition_to_roundoff(self, fallback):
        assert composition_power_sum(4, 30, 1.5) == pytest.approx(fallback["composition"], rel=1e-13)

    def test_experiment_csv_byte_identical(self, fallback):
        from cflab.sums import ExperimentConfig, weak_law_experiment

        cfg = ExperimentConfig("gauss", trials=5, n_grid=(50, 200), master_seed=77)
        assert weak_law_experiment(cfg).to_csv_text() == fallback["weak_law_csv"]

    def test_invalid_backend_rejected(self):
        env = dict(os.environ, CFLAB_BACKEND="cuda")
        proc = subprocess.run(
            [sys.executable, "-c", "import cflab.sums"],
            capture_output=True, text=True, env=env, timeout=120,
        )
        assert proc.returncode != 0
        assert "CFLAB_BACKEND" in proc.stderr


class TestReferenceChain:
    def test_kernel_matches_pure_python_reference(self):
        for law in ("lebesgue", "gauss"):
            for seed in (0, 9, trial_seed(2026, 3)):
                a = generate_digits(seed, law, 2000)
                b = chain_digits(seed, law, 2000)
                assert np.array_equal(a, b), (law, seed)


class TestThreads:
    def test_explicit_argument_wins(self, monkeypatch):
        monkeypatch.setenv("CFLAB_THREADS", "7")
        assert resolve_threads(3) == 3

    def test_env_variable(self, monkeypatch):
        monkeypatch.setenv("CFLAB_THREADS", "5")
        assert resolve_threads(None) == 5

    def test_default_is_cpu_count(self, monkeypatch):
        monkeypatch.delenv("CFLAB_THREADS", raising=False)
        assert resolve_threads(None) == (os.cpu_count() or 1)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            resolve_threads(0)


class TestPositionalDigitLaw:
    @pytest.mark.slow
    def test_gauss_law_is_stationary(self):
        """P(a_n = k) stays the invariant cell mass at every position."""
        T = 4000
        arrays = np.stack([generate_digits(trial_seed(505, t), "gauss", 51) for t in range(T)])
        for pos in (0, 4, 49):  # digit indices 1, 5, 50
            col = arrays[:, pos]
            for k in range(1, 9):
                p = math.log2(1 + 1 / (k * (k + 2)))
                f = float(np.count_nonzero(col == k)) / T
                se = math.sqrt(p * (1 - p) / T)
                assert abs(f - p) < 4 * se + 1e-12, (pos, k, f, p)

    @pytest.mark.slow
    def test_lebesgue_first_digit_law(self):
        T = 4000
        first = np.array([generate_digits(trial_seed(606, t), "lebesgue", 1)[0] for t in range(T)])
        for k in range(1, 9):
            p = 1.0 / k - 1.0 / (k + 1)
            f = float(np.count_nonzero(first == k)) / T
            se = math.sqrt(p * (1 - p) / T)
            assert abs(f - p) < 4 * se + 1e-12, (k, f, p)
