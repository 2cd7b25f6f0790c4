"""Command-line interface.

Two entry points: ``hdmean test`` runs one two-sample test on a pair of
matrix files and emits a key-value result document; ``hdmean simulate``
runs a named study (type1, power, ksweep, bench, invariance) and emits
tables.

Everything written to stdout or --out is a pure function of the arguments:
timing and progress go to stderr, so a fixed seed reproduces output
byte-for-byte at any --threads value.

Exit codes: 0 success, 2 input or configuration error, 3 numerical error
(singular covariance, zero variance, non-positive-definite model).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import experiments as exp
from .backends import get_backend
from .core import TwoSampleProblem
from .errors import (
    HdmeanError,
    InvalidK,
    NonFinite,
    NotPositiveDefinite,
    ParseError,
    SingularCovariance,
    ZeroVariance,
)
from .io import (
    MatrixFile,
    format_aligned,
    format_long_table,
    read_matrix,
    result_document,
)
from .permutation import PermutationPlan, permutation_test
from .statistics import (
    PROJECTIONS,
    ProjectionT2Statistic,
    SrivastavaDuStatistic,
    SubspaceConfig,
    SubspaceT2Statistic,
    benjamini_hochberg_adjust,
    bonferroni_adjust,
    chen_qin_pvalue,
    chen_qin_statistic,
    default_k,
    marginal_t_pvalues,
)
from .synthetic import build_block_covariance

METHODS = ("rs", "lopes", "cq", "sd", "bonferroni", "bh")

_INPUT_ERRORS = (ParseError, NonFinite, InvalidK, ValueError, OSError)
_NUMERICAL_ERRORS = (SingularCovariance, ZeroVariance, NotPositiveDefinite)


def _default_threads() -> int:
    return max(1, os.cpu_count() or 1)


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _csv_names(text: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _stderr(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# hdmean test


def _load_problem(args) -> TwoSampleProblem:
    def read(path):
        return read_matrix(
            MatrixFile(path, delimiter=args.delimiter, header=args.header, orientation=args.orientation)
        )

    return TwoSampleProblem(read(args.x), read(args.y))


def _run_test(args) -> int:
    prob = _load_problem(args)
    backend = get_backend(args.backend) if args.backend else None
    k = args.k if args.k is not None else default_k(prob.n_x, prob.n_y)
    doc: dict[str, object] = {
        "command": "test",
        "method": args.method,
        "x": args.x,
        "y": args.y,
        "n_x": prob.n_x,
        "n_y": prob.n_y,
        "p": prob.p,
        "seed": args.seed,
    }
    started = time.perf_counter()
    replicates = None
    if args.method in ("rs", "lopes", "sd"):
        if args.method == "rs":
            cfg = SubspaceConfig(k=k, b1=args.b1, seed=args.seed)
            statistic = SubspaceT2Statistic(cfg)
        elif args.method == "lopes":
            cfg = SubspaceConfig(k=k, b1=args.b1, seed=args.seed, kind=PROJECTIONS)
            statistic = ProjectionT2Statistic(cfg)
        else:
            cfg = None
            statistic = SrivastavaDuStatistic()
        plan = PermutationPlan(b2=args.b2, seed=args.seed)
        result = permutation_test(
            prob,
            statistic,
            plan,
            redraw_randomness=not args.fixed_randomness,
            estimator=args.p_estimator,
            threads=args.threads,
            backend=backend,
        )
        observed = result.observed.value
        if args.method in ("rs", "lopes"):
            observed *= prob.size_factor
            doc["k"] = k
            doc["b1"] = args.b1
        doc["b2"] = args.b2
        doc["p_estimator"] = args.p_estimator
        doc["redraw_randomness"] = not args.fixed_randomness
        doc["statistic"] = observed
        doc["p_value"] = result.p_value
        replicates = result.replicates
    elif args.method == "cq":
        doc["statistic"] = chen_qin_statistic(prob).value
        doc["p_value"] = chen_qin_pvalue(prob)
    else:
        raw = marginal_t_pvalues(prob)
        adjust = bonferroni_adjust if args.method == "bonferroni" else benjamini_hochberg_adjust
        min_adj = float(adjust(raw).min())
        doc["statistic"] = min_adj
        doc["p_value"] = min_adj
    doc["alpha"] = args.alpha
    doc["reject"] = doc["p_value"] <= args.alpha
    elapsed = time.perf_counter() - started
    _emit(result_document(doc), args.out)
    if replicates is not None and args.dump_replicates:
        Path(args.dump_replicates).write_text(
            "".join(repr(float(v)) + "\n" for v in replicates), encoding="utf-8"
        )
    _stderr(f"wall_time_seconds = {elapsed:.3f} (threads = {args.threads})")
    return 0


# ---------------------------------------------------------------------------
# hdmean simulate


def _rate_table(rows) -> tuple[str, str]:
    tuples = [row.as_tuple() for row in rows]
    return format_long_table(tuples), format_aligned(
        ("scenario", "test", "x", "rate", "ci_low", "ci_high"), tuples
    )


def _apply_common(spec, args, fields=("replicates", "alpha", "b1", "b2", "seed", "threads")):
    overrides = {}
    for name in fields:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return replace(spec, **overrides) if overrides else spec


def _parse_cov(text: str, p: int, blocks: int):
    a, b = _csv_floats(text)
    return build_block_covariance(p, blocks, a, b)


def _run_type1(args) -> int:
    spec = exp.desk_type1_spec() if args.preset == "desk" else exp.paper_type1_spec()
    spec = _apply_common(spec, args)
    if args.tests:
        _check_tests(args.tests)
        spec = replace(spec, tests=args.tests)
    if args.k is not None:
        spec = replace(spec, k=args.k)
    backend = get_backend(args.backend) if args.backend else None
    started = time.perf_counter()
    rows = exp.run_type1_study(spec, backend=backend)
    table, aligned = _rate_table(rows)
    _emit(table, args.out)
    if args.out:
        sys.stdout.write(aligned)
    _stderr(f"wall_time_seconds = {time.perf_counter() - started:.3f}")
    return 0


def _check_tests(tests) -> None:
    unknown = [t for t in tests if t not in METHODS]
    if unknown:
        raise ValueError(f"unknown tests: {', '.join(unknown)} (choose from {', '.join(METHODS)})")


def _run_power(args) -> int:
    spec = exp.desk_power_spec() if args.preset == "desk" else exp.paper_fig1_spec()
    spec = _apply_common(spec, args)
    if args.covariance:
        spec = replace(spec, covariance=_parse_cov(args.covariance, spec.covariance.p, spec.covariance.blocks))
    if args.m is not None:
        spec = replace(spec, blocks_shifted=args.m)
    if args.norms:
        spec = replace(spec, norms=args.norms)
    if args.tests:
        _check_tests(args.tests)
        spec = replace(spec, tests=args.tests)
    if args.k is not None:
        spec = replace(spec, k=args.k)
    backend = get_backend(args.backend) if args.backend else None
    started = time.perf_counter()
    rows = exp.run_power_study(spec, backend=backend)
    table, aligned = _rate_table(rows)
    _emit(table, args.out)
    if args.out:
        sys.stdout.write(aligned)
    _stderr(f"wall_time_seconds = {time.perf_counter() - started:.3f}")
    return 0


def _run_ksweep(args) -> int:
    spec = exp.desk_ksweep_spec() if args.preset == "desk" else exp.paper_fig3_spec()
    spec = _apply_common(spec, args)
    if args.covariance:
        spec = replace(spec, covariance=_parse_cov(args.covariance, spec.covariance.p, spec.covariance.blocks))
    if args.m is not None:
        spec = replace(spec, blocks_shifted=args.m)
    if args.norm is not None:
        spec = replace(spec, norm=args.norm)
    if args.k_grid:
        spec = replace(spec, k_grid=args.k_grid)
    backend = get_backend(args.backend) if args.backend else None
    started = time.perf_counter()
    result = exp.run_k_sweep(spec, backend=backend)
    table, aligned = _rate_table(result.rows)
    _emit(table, args.out)
    if args.out:
        sys.stdout.write(aligned)
    sys.stdout.write(f"best_k = {result.best_k}\n")
    _stderr(f"wall_time_seconds = {time.perf_counter() - started:.3f}")
    return 0


def _run_bench(args) -> int:
    spec = exp.desk_bench_spec() if args.preset == "desk" else exp.paper_bench_spec()
    if args.k:
        spec = replace(spec, k_grid=args.k)
    if args.threads:
        spec = replace(spec, thread_grid=args.threads)
    if args.repeats is not None:
        spec = replace(spec, repeats=args.repeats)
    if args.b1 is not None:
        spec = replace(spec, b1=args.b1)
    if args.b2 is not None:
        spec = replace(spec, b2=args.b2)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.backends:
        spec = replace(spec, backends=args.backends)
    rows = exp.bench_runtime(spec)
    tuples = [(r.backend, r.k, r.threads, round(r.seconds, 4), round(r.speedup, 3)) for r in rows]
    header = ("backend", "k", "threads", "seconds", "speedup")
    text = "\t".join(header) + "\n" + "".join("\t".join(str(v) for v in t) + "\n" for t in tuples)
    _emit(text, args.out)
    if args.out:
        sys.stdout.write(format_aligned(header, tuples))
    return 0


def _run_invariance(args) -> int:
    cfg = None
    if args.k is not None or args.b1 is not None or args.seed is not None:
        from .datasets import invariance_problem

        prob = invariance_problem()
        cfg = SubspaceConfig(
            k=args.k if args.k is not None else default_k(prob.n_x, prob.n_y),
            b1=args.b1 if args.b1 is not None else 100,
            seed=args.seed if args.seed is not None else 0,
        )
    plan = None
    if args.b2 is not None:
        plan = PermutationPlan(b2=args.b2, seed=cfg.seed if cfg else 0)
    backend = get_backend(args.backend) if args.backend else None
    started = time.perf_counter()
    report = exp.run_invariance_demo(cfg=cfg, plan=plan, threads=args.threads or 1, backend=backend)
    doc = {
        "command": "simulate invariance",
        "k": report.k,
        "b1": report.b1,
        "b2": report.b2,
        "seed": report.seed,
        "rs_stat_raw": report.rs_stat_raw,
        "rs_stat_std": report.rs_stat_std,
        "rs_p_raw": report.rs_p_raw,
        "rs_p_std": report.rs_p_std,
        "lopes_stat_raw": report.lopes_stat_raw,
        "lopes_stat_std": report.lopes_stat_std,
        "lopes_p_raw": report.lopes_p_raw,
        "lopes_p_std": report.lopes_p_std,
    }
    _emit(result_document(doc), args.out)
    _stderr(f"wall_time_seconds = {time.perf_counter() - started:.3f}")
    return 0


# ---------------------------------------------------------------------------
# Parsers


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdmean",
        description="High-dimensional two-sample mean tests with permutation p-values.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run one test on a pair of matrix files")
    t.add_argument("--x", required=True, help="first sample (delimited matrix file)")
    t.add_argument("--y", required=True, help="second sample")
    t.add_argument("--method", required=True, choices=METHODS)
    t.add_argument("--k", type=int, default=None, help="working dimension (default: floor((n_x+n_y-2)/2))")
    t.add_argument("--b1", type=int, default=100, help="subspaces/projections per statistic")
    t.add_argument("--b2", type=int, default=500, help="permutation replicates")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--threads", type=int, default=_default_threads())
    t.add_argument("--p-estimator", dest="p_estimator", choices=("paper", "addone"), default="paper")
    t.add_argument(
        "--fixed-randomness",
        action="store_true",
        help="reuse the observed draws/projections in every permutation replicate",
    )
    t.add_argument("--delimiter", default=",")
    t.add_argument("--header", action="store_true", help="skip the first line of each file")
    t.add_argument("--orientation", choices=("rows", "cols"), default="rows")
    t.add_argument("--backend", choices=("numba", "numpy", "auto"), default=None)
    t.add_argument("--out", default=None, help="write the result document here instead of stdout")
    t.add_argument("--dump-replicates", default=None, help="write permutation replicate values to this file")
    t.set_defaults(func=_run_test)

    sim = sub.add_parser("simulate", help="run a simulation study")
    study = sim.add_subparsers(dest="study", required=True)

    def common(p, preset_choices):
        p.add_argument("--preset", choices=preset_choices, default=preset_choices[0])
        p.add_argument("--replicates", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--b1", type=int, default=None)
        p.add_argument("--b2", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--backend", choices=("numba", "numpy", "auto"), default=None)
        p.add_argument("--out", default=None, help="write the delimited table here")

    p1 = study.add_parser("type1", help="null rejection rates per scenario and test")
    common(p1, ("desk", "paper-table1"))
    p1.add_argument("--tests", type=_csv_names, default=None)
    p1.add_argument("--k", type=int, default=None)
    p1.set_defaults(func=_run_type1)

    pw = study.add_parser("power", help="power over a grid of mean-shift norms")
    common(pw, ("desk", "paper-fig1"))
    pw.add_argument("--tests", type=_csv_names, default=None)
    pw.add_argument("--k", type=int, default=None)
    pw.add_argument("--covariance", default=None, help="a,b block correlations")
    pw.add_argument("--m", type=int, default=None, help="number of shifted blocks")
    pw.add_argument("--norms", type=_csv_floats, default=None)
    pw.set_defaults(func=_run_power)

    ks = study.add_parser("ksweep", help="subspaces-test power across k")
    common(ks, ("desk", "paper-fig3"))
    ks.add_argument("--covariance", default=None, help="a,b block correlations")
    ks.add_argument("--m", type=int, default=None)
    ks.add_argument("--norm", type=float, default=None)
    ks.add_argument("--k-grid", dest="k_grid", type=_csv_ints, default=None)
    ks.set_defaults(func=_run_ksweep)

    be = study.add_parser("bench", help="permutation-test wall time per (backend, k, threads)")
    be.add_argument("--preset", choices=("desk", "paper"), default="desk")
    be.add_argument("--k", type=_csv_ints, default=None, help="comma-separated k grid")
    be.add_argument("--threads", type=_csv_ints, default=None, help="comma-separated thread counts")
    be.add_argument("--repeats", type=int, default=None)
    be.add_argument("--b1", type=int, default=None)
    be.add_argument("--b2", type=int, default=None)
    be.add_argument("--seed", type=int, default=None)
    be.add_argument("--backends", type=_csv_names, default=None)
    be.add_argument("--out", default=None)
    be.set_defaults(func=_run_bench)

    inv = study.add_parser("invariance", help="raw vs standardized statistics and p-values")
    inv.add_argument("--k", type=int, default=None)
    inv.add_argument("--b1", type=int, default=None)
    inv.add_argument("--b2", type=int, default=None)
    inv.add_argument("--seed", type=int, default=None)
    inv.add_argument("--threads", type=int, default=None)
    inv.add_argument("--backend", choices=("numba", "numpy", "auto"), default=None)
    inv.add_argument("--out", default=None)
    inv.set_defaults(func=_run_invariance)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _NUMERICAL_ERRORS as exc:
        _stderr(f"error: {exc}")
        return 3
    except _INPUT_ERRORS as exc:
        _stderr(f"error: {exc}")
        return 2
    except HdmeanError as exc:
        _stderr(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
