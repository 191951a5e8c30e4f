"""Command-line front end.

Subcommands cover rational and stream expansion, product-set measures,
the truncated pair expectation, the three Monte Carlo experiments,
divisor and composition checks, and the fractal constructions.  Every
data-producing subcommand writes CSV + JSON + a manifest with content
digests into --out-dir and prints a summary; the manifest carries tool
version, command line, and timestamps, none of which enter the data
files, so those stay byte-identical across reruns and thread counts.

Exit codes: 0 success, 2 usage or domain errors, 3 a checked property
failed to hold, 4 resource limits.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
import time
from fractions import Fraction

from . import __version__, arith, fractal, measure, sums
from ._backend import backend_name
from .cf_core import digit_stream, expand_rational
from .errors import DomainError, PropertyViolation, ResourceError

__all__ = ["main", "build_parser"]


def _parse_int(text: str) -> int:
    try:
        if "e" in text.lower() or "." in text:
            v = float(text)
            if v != int(v):
                raise ValueError
            return int(v)
        return int(text)
    except ValueError:
        raise DomainError(f"expected an integer, got {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(_parse_int(part) for part in text.split(",") if part)


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part)


def _growth_from_args(args) -> fractal.GrowthFunction:
    fam = args.family
    if fam in ("sub", "sub_exponential"):
        if args.alpha is None:
            raise DomainError("--alpha is required for the sub_exponential family")
        return fractal.GrowthFunction.sub_exponential(args.alpha)
    if fam in ("super", "super_exponential"):
        if args.alpha is None:
            raise DomainError("--alpha is required for the super_exponential family")
        return fractal.GrowthFunction.super_exponential(args.alpha)
    if fam in ("table", "tabulated"):
        if not args.table:
            raise DomainError("--table is required for the tabulated family")
        return fractal.GrowthFunction.tabulated(_parse_float_list(args.table))
    raise DomainError(f"unknown growth family {fam!r}")


def _add_growth_args(sub) -> None:
    sub.add_argument("--family", required=True,
                     help="growth family: sub_exponential, super_exponential, or tabulated")
    sub.add_argument("--alpha", type=float, default=None, help="family parameter")
    sub.add_argument("--table", default=None, help="comma-separated psi values (tabulated family)")


def _add_out_dir(sub) -> None:
    sub.add_argument("--out-dir", default=".", help="directory for CSV/JSON/manifest output")


def _add_experiment_args(sub) -> None:
    sub.add_argument("--law", required=True, choices=("lebesgue", "gauss"))
    sub.add_argument("--trials", type=_parse_int, required=True)
    sub.add_argument("--n-grid", type=_parse_int_list, required=True,
                     help="comma-separated n values, increasing")
    sub.add_argument("--seed", type=_parse_int, required=True)
    sub.add_argument("--epsilon", type=float, default=None)
    sub.add_argument("--exponent", type=float, default=1.625,
                     help="truncation exponent p in floor(n (ln n)^p)")
    sub.add_argument("--threads", type=_parse_int, default=None,
                     help="worker threads (default: CFLAB_THREADS or all cores)")
    _add_out_dir(sub)


def _g17(x: float) -> str:
    return "%.17g" % x


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _utc_stamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


_ARGV: list[str] | None = None  # the argv main() actually parsed, for manifests


def _write_files(kind: str, config: dict, texts: dict[str, str], out_dir: str,
                 started: str) -> list[str]:
    """Write the data files plus a manifest; digests cover data only."""
    os.makedirs(out_dir, exist_ok=True)
    blobs = {}
    for name, text in sorted(texts.items()):
        data = text.encode("utf-8")
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(data)
        blobs[name] = data
    argv = sys.argv[1:] if _ARGV is None else _ARGV
    manifest = {
        "tool": f"cflab {__version__}",
        "command": kind,
        "command_line": " ".join(["cflab"] + list(argv)),
        "config": config,
        "master_seed": config.get("master_seed"),
        "backend": backend_name(),
        "started": started,
        "finished": _utc_stamp(),
        "files": {n: {"sha256": _sha256(d), "bytes": len(d)} for n, d in sorted(blobs.items())},
    }
    mname = kind + "_manifest.json"
    with open(os.path.join(out_dir, mname), "wb") as fh:
        fh.write((sums._json_text(manifest) + "\n").encode("utf-8"))
    return sorted(blobs) + [mname]


def _csv_text(columns: tuple[str, ...], rows: list[dict]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            text = sums._cell(row.get(col))
            if "," in text or '"' in text or "\n" in text:
                text = '"' + text.replace('"', '""') + '"'
            cells.append(text)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _write_generic(kind: str, config: dict, columns: tuple[str, ...], rows: list[dict],
                   out_dir: str, started: str) -> list[str]:
    payload = {
        "kind": kind,
        "config": config,
        "config_sha256": _sha256(sums._json_text(config).encode()),
        "notes": [],
        "rows": [{k: r.get(k) for k in columns} for r in rows],
    }
    texts = {
        kind + ".csv": _csv_text(columns, rows),
        kind + ".json": sums._json_text(payload) + "\n",
    }
    return _write_files(kind, config, texts, out_dir, started)


def _write_report(report: sums.ExperimentReport, out_dir: str, started: str) -> list[str]:
    texts = {
        report.kind + ".csv": report.to_csv_text(),
        report.kind + ".json": report.to_json_text(),
    }
    return _write_files(report.kind, report.config.serializable(), texts, out_dir, started)


def _experiment_config(args) -> sums.ExperimentConfig:
    return sums.ExperimentConfig(
        law=args.law,
        trials=args.trials,
        n_grid=args.n_grid,
        master_seed=args.seed,
        epsilon=args.epsilon,
        truncation_exponent=args.exponent,
        threads=args.threads,
    )


def _print_report(report: sums.ExperimentReport, written: list[str], out_dir: str) -> None:
    for row in report.rows:
        target = "" if row.get("target") is None else f" target={_g17(row['target'])}"
        stderr = "" if row.get("stderr") is None else f" stderr={_g17(row['stderr'])}"
        value = row["value"]
        vtext = str(value) if isinstance(value, int) else _g17(value)
        print(f"{row['statistic']} n={row['n']} value={vtext}{stderr}{target}")
    print(f"wrote {', '.join(written)} in {out_dir}")


def _cmd_expand(args) -> int:
    by_fraction = args.num is not None or args.den is not None
    by_stream = args.seed is not None
    if by_fraction == by_stream:
        raise DomainError("pass either --num/--den or --seed/--law/--digits")
    if by_fraction:
        if args.num is None or args.den is None:
            raise DomainError("--num and --den go together")
        seq = expand_rational(args.num, args.den, max_digits=args.max_digits)
        print(" ".join(str(d) for d in seq.digits))
        return 0
    stream = digit_stream(args.seed, args.law)
    print(" ".join(str(d) for d in stream.take(args.digits)))
    return 0


def _cmd_measure_product_set(args) -> int:
    started = _utc_stamp()
    t = Fraction(args.t)
    ps = measure.product_set(t)
    leb = measure.lebesgue(ps)
    gau = measure.gauss(ps)
    row = {
        "t": str(t), "components": len(ps.components),
        "mu": gau.value, "lambda": leb.value,
        "asymptotic": None, "remainder": None,
    }
    tf = float(t)
    if tf > 1.0:
        row["asymptotic"] = measure.asymptotic_product_measure(tf)
        row["remainder"] = gau.value * tf * math.log(2.0) - math.log(tf)
    print(f"components={row['components']}")
    print(f"lambda={_g17(row['lambda'])}")
    print(f"mu={_g17(row['mu'])}")
    if row["asymptotic"] is not None:
        print(f"asymptotic={_g17(row['asymptotic'])}")
        print(f"remainder={_g17(row['remainder'])}")
    written = _write_generic(
        "product_set", {"t": str(t)},
        ("t", "components", "mu", "lambda", "asymptotic", "remainder"),
        [row], args.out_dir, started)
    print(f"wrote {', '.join(written)} in {args.out_dir}")
    return 0


def _cmd_expectation(args) -> int:
    started = _utc_stamp()
    thr = args.threshold
    asym = math.log(thr) ** 2 / (2.0 * math.log(2.0)) if thr > 1 else 0.0
    if args.asymptotic:
        print(f"asymptotic={_g17(asym)}")
        return 0
    value = measure.truncated_pair_expectation(thr, term_cap=args.term_cap)
    print(f"value={_g17(value)}")
    written = _write_generic(
        "expectation", {"threshold": thr, "term_cap": args.term_cap},
        ("threshold", "value", "asymptotic"),
        [{"threshold": thr, "value": value, "asymptotic": asym}],
        args.out_dir, started)
    print(f"wrote {', '.join(written)} in {args.out_dir}")
    return 0


def _cmd_weak_law(args) -> int:
    started = _utc_stamp()
    report = sums.weak_law_experiment(_experiment_config(args))
    _print_report(report, _write_report(report, args.out_dir, started), args.out_dir)
    return 0


def _cmd_trimmed_law(args) -> int:
    started = _utc_stamp()
    report = sums.trimmed_law_experiment(_experiment_config(args))
    _print_report(report, _write_report(report, args.out_dir, started), args.out_dir)
    return 0


def _cmd_baselines(args) -> int:
    started = _utc_stamp()
    report = sums.baseline_experiments(_experiment_config(args))
    _print_report(report, _write_report(report, args.out_dir, started), args.out_dir)
    return 0


def _cmd_divisor_check(args) -> int:
    started = _utc_stamp()
    bound = arith.constructive_c_epsilon(args.epsilon)
    print(f"M={bound.M}")
    print(f"l0={bound.l0}")
    print(f"c=2^{bound.M * bound.l0}")
    ratio, argmax = arith.divisor_bound_scan(args.epsilon, args.limit)
    print(f"max_ratio={_g17(ratio)} at n={argmax}")
    holds = ratio <= float(bound.c) if bound.c < 10 ** 300 else True
    row = {
        "epsilon": args.epsilon, "limit": args.limit, "M": bound.M, "l0": bound.l0,
        "log2_c": bound.M * bound.l0, "max_ratio": ratio, "argmax": argmax, "holds": holds,
    }
    written = _write_generic(
        "divisor_check", {"epsilon": args.epsilon, "limit": args.limit},
        ("epsilon", "limit", "M", "l0", "log2_c", "max_ratio", "argmax", "holds"),
        [row], args.out_dir, started)
    print(f"wrote {', '.join(written)} in {args.out_dir}")
    if not holds:
        print("bound violated", file=sys.stderr)
        return 3
    print("bound holds")
    return 0


def _cmd_composition_check(args) -> int:
    started = _utc_stamp()
    rows = []
    worst = 0.0
    failed = False
    for s in args.s_list:
        for n in range(1, args.n_max + 1):
            for m in range(n, args.m_max + 1):
                res = arith.composition_sum(arith.CompositionQuery(n, m, s))
                rows.append({"n": n, "m": m, "s": s, "total": res.total,
                             "bound": res.bound, "holds": res.holds, "count": res.count})
                if res.bound > 0:
                    worst = max(worst, res.total / res.bound)
                if not res.holds:
                    failed = True
                    print(f"bound fails at n={n} m={m} s={s:g}: "
                          f"total={_g17(res.total)} bound={_g17(res.bound)}", file=sys.stderr)
    written = _write_generic(
        "composition_check",
        {"n_max": args.n_max, "m_max": args.m_max, "s_list": list(args.s_list)},
        ("n", "m", "s", "total", "bound", "holds", "count"),
        rows, args.out_dir, started)
    print(f"checked={len(rows)}")
    print(f"worst_ratio={_g17(worst)}")
    print(f"wrote {', '.join(written)} in {args.out_dir}")
    if failed:
        return 3
    print("bound holds")
    return 0


def _cmd_falconer(args) -> int:
    started = _utc_stamp()
    phi = _growth_from_args(args)
    est = fractal.falconer_lower_bound(psi=phi, horizon=args.horizon)
    print(f"value={_g17(est.value)}")
    print(f"raw={_g17(est.diagnostics['raw_value'])}")
    print(f"tail_spread={_g17(est.diagnostics['tail_spread'])}")
    row = {
        "family": args.family, "alpha": args.alpha, "horizon": args.horizon,
        "value": est.value, "raw": est.diagnostics["raw_value"],
        "tail_min": est.diagnostics["tail_min"], "tail_max": est.diagnostics["tail_max"],
    }
    written = _write_generic(
        "falconer", {"family": args.family, "alpha": args.alpha, "horizon": args.horizon},
        ("family", "alpha", "horizon", "value", "raw", "tail_min", "tail_max"),
        [row], args.out_dir, started)
    print(f"wrote {', '.join(written)} in {args.out_dir}")
    return 0


def _cmd_schedule(args) -> int:
    started = _utc_stamp()
    phi = _growth_from_args(args)
    delta = "auto" if args.delta == "auto" else float(args.delta)
    sched = fractal.build_sparse_schedule(phi, args.M, args.tau, delta=delta, horizon=args.horizon)
    print(f"delta={_g17(sched.delta)}")
    print(f"spikes={len(sched.n_seq)}")
    print(f"n1={sched.n_seq[0]}")
    print(f"exact_digits_until_k={sched.exact_digits_until}")
    head = ", ".join(
        f"n_{k}={n} digit={sched.digit_seq[k - 1] if sched.digit_seq[k - 1] is not None else 'log:' + _g17(sched.log_digit_seq[k - 1])}"
        for k, n in list(enumerate(sched.n_seq, start=1))[:5]
    )
    print(f"head: {head}")
    rows = [
        {"k": k, "n_k": n, "epsilon_k": sched.epsilon(k),
         "digit": sched.digit_seq[k - 1], "log_digit": sched.log_digit_seq[k - 1]}
        for k, n in enumerate(sched.n_seq, start=1)
    ]
    written = _write_generic(
        "schedule",
        {"family": args.family, "alpha": args.alpha, "M": args.M, "tau": args.tau,
         "delta": sched.delta, "horizon": args.horizon},
        ("k", "n_k", "epsilon_k", "digit", "log_digit"),
        rows, args.out_dir, started)
    print(f"wrote {', '.join(written)} in {args.out_dir}")
    if args.sample_seed is not None:
        k_max = args.k_max or min(20, sched.exact_digits_until)
        sample = fractal.sample_scheduled_digits(sched, args.sample_seed, k_max)
        for k, nk, S, target, ok in sample.rows:
            print(f"k={k} n={nk} S={S} target={_g17(target)} ok={ok}")
        if not sample.all_ok:
            print("membership audit failed", file=sys.stderr)
            return 3
        print("membership audit passed")
    return 0


def _cmd_envelope(args) -> int:
    started = _utc_stamp()
    phi = _growth_from_args(args)
    env = fractal.build_digit_envelope(phi, args.horizon)
    print(f"N={env.N}")
    print(f"levels={env.levels}")
    print(f"exact_until={env.exact_until}")
    print(f"widened={len(env.widened)}")
    # geometric subsample of the digit ranges, at most ~64 rows
    rows = []
    n = env.N + 1
    while n <= args.horizon:
        rows.append({
            "n": n, "log_d": float(env.log_d[n]),
            "lo": int(env.lo[n]) if env.lo[n] >= 0 else None,
            "hi": int(env.hi[n]) if env.hi[n] >= 0 else None,
            "log_m": float(env.log_m[n]),
        })
        n = max(n + 1, int(n * 1.2))
    written = _write_generic(
        "envelope", {"family": args.family, "alpha": args.alpha, "horizon": args.horizon},
        ("n", "log_d", "lo", "hi", "log_m"),
        rows, args.out_dir, started)
    print(f"wrote {', '.join(written)} in {args.out_dir}")
    if args.sample_seed is not None:
        sample = fractal.sample_envelope_digits(env, args.sample_seed)
        for n, ratio, dev in sample.rows:
            print(f"n={n} ratio={_g17(ratio)} deviation={_g17(dev)}")
        if not sample.in_range:
            print("sampled digit left its envelope range", file=sys.stderr)
            return 3
    if args.level is not None:
        stats = fractal.covering_statistics(env, args.level)
        est = stats.slope_estimate()
        print(f"level={stats.level} log_count={_g17(stats.log_count)} "
              f"log_len=[{_g17(stats.log_len_min)}, {_g17(stats.log_len_max)}]")
        print(f"slope={_g17(est.value)}")
    return 0


def _cmd_sparse_hypotheses(args) -> int:
    started = _utc_stamp()
    phi = _growth_from_args(args)
    report = fractal.check_sparse_hypotheses(phi, args.nk_rule, args.s, args.epsilon, args.horizon)
    print(f"M={_g17(report.M_value)}")
    print(f"zeta={_g17(report.zeta_value)}")
    print(f"log_c={_g17(report.log_c_epsilon)}")
    print(f"rule={report.rule}")
    print(f"spikes={report.k_count}")
    print(f"gap_violations={report.gap_violations}")
    row = {
        "rule": report.rule, "s": args.s, "epsilon": args.epsilon, "horizon": args.horizon,
        "M": report.M_value, "zeta": report.zeta_value, "log_c": report.log_c_epsilon,
        "spikes": report.k_count, "gap_violations": report.gap_violations,
        "established": report.established, "first_k": report.first_k,
    }
    written = _write_generic(
        "sparse_hypotheses",
        {"family": args.family, "alpha": args.alpha, "nk_rule": args.nk_rule,
         "s": args.s, "epsilon": args.epsilon, "horizon": args.horizon},
        ("rule", "s", "epsilon", "horizon", "M", "zeta", "log_c", "spikes",
         "gap_violations", "established", "first_k"),
        [row], args.out_dir, started)
    print(f"wrote {', '.join(written)} in {args.out_dir}")
    if report.established:
        print(f"established from k={report.first_k}")
        return 0
    print("hypotheses not established within the horizon", file=sys.stderr)
    return 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cflab",
        description="continued-fraction digit statistics: exact measures, "
                    "Monte Carlo limit-law experiments, and Cantor constructions",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("expand", help="continued-fraction digits of a rational or a seeded stream")
    p.add_argument("--num", type=_parse_int, default=None, help="numerator (with --den)")
    p.add_argument("--den", type=_parse_int, default=None, help="denominator (with --num)")
    p.add_argument("--max-digits", type=_parse_int, default=None)
    p.add_argument("--seed", type=_parse_int, default=None, help="stream mode: bit-source seed")
    p.add_argument("--law", choices=("lebesgue", "gauss"), default="lebesgue")
    p.add_argument("--digits", type=_parse_int, default=10, help="stream mode: digits to emit")
    p.set_defaults(fn=_cmd_expand)

    p = subs.add_parser("measure-product-set", help="measures of {x: a_1 a_2 >= t}")
    p.add_argument("--t", required=True, help="threshold (int, float, or p/q)")
    _add_out_dir(p)
    p.set_defaults(fn=_cmd_measure_product_set)

    p = subs.add_parser("expectation", help="truncated pair expectation E*(threshold)")
    p.add_argument("--threshold", type=_parse_int, required=True)
    p.add_argument("--term-cap", type=_parse_int, default=measure.DEFAULT_TERM_CAP)
    p.add_argument("--asymptotic", action="store_true",
                   help="print the leading-order value instead of summing")
    _add_out_dir(p)
    p.set_defaults(fn=_cmd_expectation)

    p = subs.add_parser("weak-law", help="normalized pair-sum distribution experiment")
    _add_experiment_args(p)
    p.set_defaults(fn=_cmd_weak_law)

    p = subs.add_parser("trimmed-law", help="trimmed/truncated pair-sum experiment")
    _add_experiment_args(p)
    p.set_defaults(fn=_cmd_trimmed_law)

    p = subs.add_parser("baselines", help="single-digit sum baselines (plain and trimmed)")
    _add_experiment_args(p)
    p.set_defaults(fn=_cmd_baselines)

    p = subs.add_parser("divisor-check", help="constructive divisor bound d(n) <= c n^epsilon")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--limit", type=_parse_int, default=1_000_000)
    _add_out_dir(p)
    p.set_defaults(fn=_cmd_divisor_check)

    p = subs.add_parser("composition-check", help="geometric bound on composition power sums")
    p.add_argument("--n-max", type=_parse_int, default=6)
    p.add_argument("--m-max", type=_parse_int, default=30)
    p.add_argument("--s-list", type=_parse_float_list, default=(0.6, 0.75, 0.9))
    _add_out_dir(p)
    p.set_defaults(fn=_cmd_composition_check)

    p = subs.add_parser("falconer", help="nested-interval dimension lower bound")
    _add_growth_args(p)
    p.add_argument("--horizon", type=_parse_int, required=True)
    _add_out_dir(p)
    p.set_defaults(fn=_cmd_falconer)

    p = subs.add_parser("schedule", help="sparse-spike digit schedule")
    _add_growth_args(p)
    p.add_argument("--M", type=_parse_int, required=True, help="filler digit cap")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--delta", default="auto")
    p.add_argument("--horizon", type=_parse_int, default=1_000_000)
    p.add_argument("--sample-seed", type=_parse_int, default=None)
    p.add_argument("--k-max", type=_parse_int, default=None)
    _add_out_dir(p)
    p.set_defaults(fn=_cmd_schedule)

    p = subs.add_parser("envelope", help="digit envelope pinning S_n to a growth target")
    _add_growth_args(p)
    p.add_argument("--horizon", type=_parse_int, required=True)
    p.add_argument("--sample-seed", type=_parse_int, default=None)
    p.add_argument("--level", type=_parse_int, default=None,
                   help="also print covering statistics at this level")
    _add_out_dir(p)
    p.set_defaults(fn=_cmd_envelope)

    p = subs.add_parser("sparse-hypotheses", help="spacing/growth hypotheses for the dimension formula")
    _add_growth_args(p)
    p.add_argument("--nk-rule", required=True, help="spike rule: auto, k, k^P, or C*k")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--horizon", type=_parse_int, required=True)
    _add_out_dir(p)
    p.set_defaults(fn=_cmd_sparse_hypotheses)

    return parser


def main(argv: list[str] | None = None) -> int:
    global _ARGV
    _ARGV = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PropertyViolation as exc:
        print(f"property violated: {exc}", file=sys.stderr)
        return 3
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
