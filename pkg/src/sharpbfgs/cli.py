"""Command-line interface.

Subcommands: ``run`` executes an experiment from a key=value config file
plus flag overrides, ``certify`` re-checks an existing trace directory,
``bench`` sweeps synthetic (d, kappa) grids, ``selftest`` runs the embedded
property suite. Exit codes: 0 success, 1 certification failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

from .analysis import CheckStatus
from .solvers import Method


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sharpbfgs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment")
    p_run.add_argument("--config", type=Path, help="key=value experiment file")
    p_run.add_argument("--problem", choices=["quadratic", "logistic", "libsvm"])
    p_run.add_argument("--dataset", help="LIBSVM file path")
    p_run.add_argument("--method", help="comma-separated method list")
    p_run.add_argument("--mu", type=float, help="logistic regularization")
    p_run.add_argument("--seed", type=int, help="solver rng seed")
    p_run.add_argument("--problem-seed", type=int, dest="problem_seed")
    p_run.add_argument("--correction", choices=["on", "off"])
    p_run.add_argument("--max-iters", type=int, dest="max_iters")
    p_run.add_argument("--diagnostics", type=int, help="diagnostics stride (0 disables)")
    p_run.add_argument("--d", type=int, help="problem dimension")
    p_run.add_argument("--kappa", type=float, help="quadratic condition number")
    p_run.add_argument("--n", type=int, help="logistic sample count")
    p_run.add_argument("--envelopes", help="comma-separated envelope kinds to plot")
    p_run.add_argument("--timing", choices=["on", "off"])
    p_run.add_argument("--out", type=Path, help="output directory")

    p_cert = sub.add_parser("certify", help="re-check a trace directory")
    p_cert.add_argument("trace_dir", type=Path)

    p_bench = sub.add_parser("bench", help="sweep synthetic quadratic grids")
    p_bench.add_argument("--dims", default="10,50", help="comma-separated dimensions")
    p_bench.add_argument("--kappas", default="10,100", help="comma-separated condition numbers")
    p_bench.add_argument("--method", default="bfgs,greedy,sharpened-quadratic")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--max-iters", type=int, default=500, dest="max_iters")
    p_bench.add_argument("--out", type=Path, required=True)

    sub.add_parser("selftest", help="run the embedded property suite")
    return parser


def _cmd_run(args) -> int:
    from .experiment import ExperimentSpec, load_spec, parse_config_lines, run_experiment

    overrides = {
        "problem": args.problem,
        "dataset": args.dataset,
        "methods": args.method,
        "mu": None if args.mu is None else str(args.mu),
        "seed": None if args.seed is None else str(args.seed),
        "problem_seed": None if args.problem_seed is None else str(args.problem_seed),
        "correction": args.correction,
        "max_iters": None if args.max_iters is None else str(args.max_iters),
        "diagnostics": None if args.diagnostics is None else str(args.diagnostics),
        "d": None if args.d is None else str(args.d),
        "kappa": None if args.kappa is None else str(args.kappa),
        "n": None if args.n is None else str(args.n),
        "envelopes": args.envelopes,
        "timing": args.timing,
        "out": None if args.out is None else str(args.out),
    }
    try:
        if args.config is not None:
            spec = load_spec(args.config, overrides)
        else:
            kwargs = parse_config_lines([], overrides)
            if "out_dir" not in kwargs:
                raise ValueError("--out is required without a config file")
            spec = ExperimentSpec(**kwargs)
    except (ValueError, KeyError, TypeError) as exc:
        raise _UsageError(str(exc)) from exc
    outcome = run_experiment(spec)
    for method, report in outcome.reports.items():
        res = outcome.results[method]
        failing = [c.name for c in report.checks if c.status is CheckStatus.FAIL]
        status = "certified" if not failing else f"FAILED {failing}"
        print(
            f"{method.value}: {res.final.t} iterations, reason={res.terminal_reason.value}, {status}"
        )
    print(f"artifacts: {spec.out_dir}")
    return 0 if outcome.all_certified else 1


def _cmd_certify(args) -> int:
    from .experiment import certify_directory

    try:
        ok, reports = certify_directory(args.trace_dir)
    except FileNotFoundError as exc:
        raise _UsageError(str(exc)) from exc
    for name, report in reports.items():
        failing = [c.name for c in report.checks if c.status is CheckStatus.FAIL]
        print(f"{name}: {'pass' if report.passed else 'FAIL ' + str(failing)}")
    return 0 if ok else 1


def _cmd_bench(args) -> int:
    import numpy as np

    from .datasets import synth_quadratic
    from .objectives import quadratic_oracle
    from .solvers import SolverConfig, default_x0, run

    try:
        dims = [int(v) for v in args.dims.split(",") if v]
        kappas = [float(v) for v in args.kappas.split(",") if v]
        methods = [Method(v.strip()) for v in args.method.split(",") if v.strip()]
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for d in dims:
        for kappa in kappas:
            oracle = quadratic_oracle(synth_quadratic(d, kappa, args.seed))
            x0 = default_x0(d)
            for method in methods:
                cfg = SolverConfig(method=method, max_iters=args.max_iters, rng_seed=args.seed)
                start = time.perf_counter()
                res = run(oracle, x0, cfg)
                elapsed_ms = 1e3 * (time.perf_counter() - start)
                lam0 = res.records[0].lam
                ratio = res.final.lam / lam0 if lam0 else float("nan")
                rows.append(
                    (method.value, d, kappa, res.final.t, f"{ratio:.6e}",
                     res.terminal_reason.value, f"{elapsed_ms:.3f}")
                )
                print(f"d={d} kappa={kappa} {method.value}: {res.final.t} iters, ratio {ratio:.2e}")
    with open(args.out / "bench.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "d", "kappa", "iterations", "lambda_ratio", "reason", "wall_ms"])
        writer.writerows(rows)
    return 0


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "certify":
            return _cmd_certify(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "selftest":
            from .selftest import run_all

            return 0 if run_all() else 1
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2  # pragma: no cover - unreachable with required subparsers


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
