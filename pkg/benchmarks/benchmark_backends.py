#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-numpy fallback.

Run with no arguments.  The backend is fixed per process, so this script
re-launches itself once per backend (CFLAB_BACKEND=numba / numpy), times the
hot kernels in each child, then prints a side-by-side table with speedups
and cross-backend agreement checks.
"""

import json
import os
import subprocess
import sys
import time

REPEATS = 3

CASES = [
    ("digit generation (lebesgue, 2e6 digits)", "digits"),
    ("digit generation (gauss, 2e6 digits)", "digits_gauss"),
    ("pair expectation sum (threshold 1e6)", "pair_expectation"),
    ("divisor sieve (limit 2e6)", "sieve"),
    ("composition power sum (6 parts, m<=40)", "composition"),
]


def _best_of(fn):
    best = float("inf")
    value = None
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t0)
    return best, value


def run_worker():
    from cflab import _backend
    from cflab._kernels import (
        composition_power_sum,
        divisor_sieve,
        generate_digits,
        pair_expectation_sum,
    )

    # compile outside the timed region
    generate_digits(1, "lebesgue", 64)
    generate_digits(1, "gauss", 64)
    pair_expectation_sum(100.0)
    divisor_sieve(64)
    composition_power_sum(2, 4, 1.5)

    out = {"backend": _backend.backend_name(), "cases": {}}

    t, digits = _best_of(lambda: generate_digits(2026, "lebesgue", 2_000_000))
    out["cases"]["digits"] = {"seconds": t, "check": int(digits[:64].sum())}

    t, digits = _best_of(lambda: generate_digits(2026, "gauss", 2_000_000))
    out["cases"]["digits_gauss"] = {"seconds": t, "check": int(digits[:64].sum())}

    t, v = _best_of(lambda: pair_expectation_sum(1_000_000.0))
    out["cases"]["pair_expectation"] = {"seconds": t, "check": float(v)}

    t, sieve = _best_of(lambda: divisor_sieve(2_000_000))
    out["cases"]["sieve"] = {"seconds": t, "check": int(sieve.sum())}

    def comp():
        total = 0.0
        for m in range(6, 41):
            total += composition_power_sum(6, m, 0.75)
        return total

    t, v = _best_of(comp)
    out["cases"]["composition"] = {"seconds": t, "check": float(v)}

    json.dump(out, sys.stdout)


def run_backend(backend):
    env = dict(os.environ, CFLAB_BACKEND=backend)
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker"],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout)


def main():
    if "--worker" in sys.argv:
        run_worker()
        return

    print("timing kernels under both backends (best of %d runs each)..." % REPEATS)
    results = {b: run_backend(b) for b in ("numba", "numpy")}
    for b in ("numba", "numpy"):
        if results[b]["backend"] != b:
            print(f"warning: requested {b}, process resolved {results[b]['backend']}")

    print()
    print(f"{'kernel':<44} {'numba':>9} {'numpy':>9} {'speedup':>8}")
    print("-" * 74)
    for label, key in CASES:
        a = results["numba"]["cases"][key]
        f = results["numpy"]["cases"][key]
        speedup = f["seconds"] / a["seconds"] if a["seconds"] > 0 else float("inf")
        print(f"{label:<44} {a['seconds']:>8.3f}s {f['seconds']:>8.3f}s {speedup:>7.1f}x")

    print()
    worst_rel = 0.0
    for label, key in CASES:
        ca = results["numba"]["cases"][key]["check"]
        cf = results["numpy"]["cases"][key]["check"]
        if isinstance(ca, int):
            status = "identical" if ca == cf else f"MISMATCH {ca} vs {cf}"
        else:
            rel = abs(ca - cf) / max(abs(ca), 1e-300)
            worst_rel = max(worst_rel, rel)
            status = f"rel diff {rel:.2e}"
        print(f"agreement  {label:<42} {status}")
    print(f"\nworst float discrepancy across backends: {worst_rel:.2e}")


if __name__ == "__main__":
    main()
