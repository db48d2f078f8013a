"""Experiment orchestration: build a problem, run the selected methods,
certify every run, and write traces / summaries / plots.

Artifacts per method live under ``<out>/<method>/``: a trace CSV with
round-trip-safe float formatting, a summary JSON (stable key order) echoing
the configuration and problem fingerprint, and the certification JSON. A
combined SVG convergence plot is written at the experiment root.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import datasets
from .analysis import CertificationReport, EnvelopeKind, RateEnvelope, certify_run, envelope_value
from .objectives import ObjectiveOracle, logistic_oracle, quadratic_oracle
from .solvers import (
    IterationRecord,
    Method,
    RunResult,
    SolverConfig,
    TerminalReason,
    default_x0,
    run,
)

TRACE_COLUMNS = ("t", "f", "grad_norm", "lambda", "sigma", "theta", "r", "wall_nanos")

_RECORD_FIELDS = ("t", "f", "grad_norm", "lam", "sigma", "theta", "r", "wall_nanos")


def qn_threads() -> int:
    """Run-level parallelism cap; defaults to 1 for reproducibility."""
    try:
        return max(1, int(os.environ.get("QN_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class ExperimentSpec:
    """One experiment: a problem source, methods to run, solver knobs."""

    problem_kind: str  # quadratic | logistic | libsvm
    methods: list[Method]
    out_dir: Path
    dataset_path: str | None = None
    dataset_dim: int | None = None
    dim: int = 50
    kappa: float = 100.0
    n_samples: int = 1000
    problem_seed: int = 0
    mu_reg: float | None = None
    sc_const: float | None = None
    max_iters: int = 500
    tol_grad: float | None = None
    tol_lambda: float = 0.0
    correction_enabled: bool = False
    rng_seed: int = 0
    diagnostics_stride: int = 1
    quadrature_nodes: int = 21
    theta_general: bool = False
    measure_time: bool = False
    envelopes: list[EnvelopeKind] = field(default_factory=list)
    x0: np.ndarray | None = None

    def __post_init__(self):
        if self.problem_kind not in ("quadratic", "logistic", "libsvm"):
            raise ValueError(f"unknown problem kind {self.problem_kind!r}")
        if not self.methods:
            raise ValueError("at least one method is required")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate methods in experiment spec")
        self.methods = [Method(m) for m in self.methods]
        self.out_dir = Path(self.out_dir)
        if self.problem_kind == "libsvm" and not self.dataset_path:
            raise ValueError("libsvm problems need a dataset path")

    def solver_config(self, method: Method) -> SolverConfig:
        return SolverConfig(
            method=method,
            max_iters=self.max_iters,
            tol_grad=self.tol_grad,
            tol_lambda=self.tol_lambda,
            correction_enabled=self.correction_enabled,
            rng_seed=self.rng_seed,
            diagnostics_stride=self.diagnostics_stride,
            quadrature_nodes=self.quadrature_nodes,
            theta_general=self.theta_general,
            measure_time=self.measure_time,
        )

    def build_oracle(self) -> ObjectiveOracle:
        if self.problem_kind == "quadratic":
            problem = datasets.synth_quadratic(self.dim, self.kappa, self.problem_seed)
            return quadratic_oracle(problem)
        if self.problem_kind == "logistic":
            ds = datasets.synth_logistic(self.n_samples, self.dim, self.problem_seed)
        else:
            ds = datasets.parse_libsvm(self.dataset_path, dim=self.dataset_dim)
            ds = datasets.normalize_rows(ds)
        mu = self.mu_reg
        if mu is None and self.problem_kind == "libsvm":
            stem = Path(self.dataset_path).name.split(".")[0]
            mu = datasets.DATASET_MU.get(stem)
        if mu is None:
            raise ValueError("mu_reg is required for this problem")
        return logistic_oracle(datasets.logistic_problem(ds, mu), sc=self.sc_const)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["methods"] = [m.value for m in self.methods]
        out["envelopes"] = [e.value for e in self.envelopes]
        out["out_dir"] = str(self.out_dir)
        out["x0"] = None if self.x0 is None else list(map(float, self.x0))
        return out


_BOOL_KEYS = {"correction": "correction_enabled", "theta_general": "theta_general", "timing": "measure_time"}
_INT_KEYS = {
    "d": "dim",
    "n": "n_samples",
    "problem_seed": "problem_seed",
    "seed": "rng_seed",
    "max_iters": "max_iters",
    "diagnostics": "diagnostics_stride",
    "quadrature_nodes": "quadrature_nodes",
    "dataset_dim": "dataset_dim",
}
_FLOAT_KEYS = {
    "kappa": "kappa",
    "mu": "mu_reg",
    "sc": "sc_const",
    "tol_grad": "tol_grad",
    "tol_lambda": "tol_lambda",
}


def parse_config_lines(lines, overrides: dict | None = None) -> dict:
    """Parse flat ``key=value`` experiment configuration lines."""
    raw: dict[str, str] = {}
    for line_no, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ValueError(f"config line {line_no}: expected key=value, got {text!r}")
        key, _, value = text.partition("=")
        raw[key.strip()] = value.strip()
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    kwargs: dict = {}
    for key, value in raw.items():
        if key == "problem":
            kwargs["problem_kind"] = value
        elif key == "dataset":
            kwargs["dataset_path"] = value
            kwargs.setdefault("problem_kind", "libsvm")
        elif key == "methods" or key == "method":
            kwargs["methods"] = [Method(v.strip()) for v in value.split(",") if v.strip()]
        elif key == "envelopes":
            kwargs["envelopes"] = [EnvelopeKind(v.strip()) for v in value.split(",") if v.strip()]
        elif key == "out":
            kwargs["out_dir"] = Path(value)
        elif key in _BOOL_KEYS:
            if value not in ("on", "off"):
                raise ValueError(f"{key} must be on or off, got {value!r}")
            kwargs[_BOOL_KEYS[key]] = value == "on"
        elif key in _INT_KEYS:
            kwargs[_INT_KEYS[key]] = int(value)
        elif key in _FLOAT_KEYS:
            kwargs[_FLOAT_KEYS[key]] = float(value)
        else:
            raise ValueError(f"unknown config key {key!r}")
    return kwargs


def load_spec(path, overrides: dict | None = None) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        kwargs = parse_config_lines(fh, overrides)
    if "out_dir" not in kwargs:
        kwargs["out_dir"] = Path(path).parent / "out"
    return ExperimentSpec(**kwargs)


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_trace(result: RunResult, path) -> None:
    """Trace CSV with shortest round-trip float formatting."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in result.records:
            writer.writerow(_format_value(getattr(rec, f)) for f in _RECORD_FIELDS)


def read_trace(path) -> list[IterationRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        for row in reader:
            vals = dict(zip(_RECORD_FIELDS, row))
            records.append(
                IterationRecord(
                    t=int(vals["t"]),
                    f=float(vals["f"]),
                    grad_norm=float(vals["grad_norm"]),
                    lam=float(vals["lam"]) if vals["lam"] else None,
                    sigma=float(vals["sigma"]) if vals["sigma"] else None,
                    theta=float(vals["theta"]) if vals["theta"] else None,
                    r=float(vals["r"]) if vals["r"] else None,
                    wall_nanos=int(vals["wall_nanos"]),
                )
            )
    return records


def write_summary(result: RunResult, report: CertificationReport, path) -> None:
    config = dataclasses.asdict(result.config)
    config["method"] = result.config.method.value
    summary = {
        "method": result.config.method.value,
        "terminal_reason": result.terminal_reason.value,
        "iterations": result.final.t,
        "lambda0": result.records[0].lam,
        "lambda_final": result.final.lam,
        "f_final": result.final.f,
        "grad_norm_final": result.final.grad_norm,
        "config": config,
        "fingerprint": result.fingerprint,
        "certification_passed": report.passed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_run(method_dir: Path) -> RunResult:
    """Rebuild a RunResult from a method's trace + summary artifacts."""
    with open(method_dir / "summary.json", "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    config = dict(summary["config"])
    config["method"] = Method(config["method"])
    return RunResult(
        records=read_trace(method_dir / "trace.csv"),
        terminal_reason=TerminalReason(summary["terminal_reason"]),
        config=SolverConfig(**config),
        fingerprint=summary["fingerprint"],
    )


@dataclass
class ExperimentOutcome:
    spec: ExperimentSpec
    results: dict[Method, RunResult]
    reports: dict[Method, CertificationReport]
    plot_path: Path | None

    @property
    def all_certified(self) -> bool:
        return all(r.passed for r in self.reports.values())


def plot_experiment(spec: ExperimentSpec, results: dict[Method, RunResult], path: Path) -> None:
    """Self-contained SVG: decrement ratio on top, trace gap below (when
    recorded), one series per method plus requested theoretical envelopes."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    has_sigma = any(
        any(rec.sigma is not None for rec in res.records) for res in results.values()
    )
    n_panels = 2 if has_sigma else 1
    fig, axes = plt.subplots(n_panels, 1, figsize=(7, 4 * n_panels), squeeze=False)
    ax_lam = axes[0][0]
    floor = 1e-16
    for method, res in results.items():
        ts = [r.t for r in res.records if r.lam is not None]
        lams = [r.lam for r in res.records if r.lam is not None]
        if not ts or lams[0] <= 0:
            continue
        ratio = np.maximum(np.asarray(lams) / lams[0], floor)
        ax_lam.semilogy(ts, ratio, label=method.value)
    first = next(iter(results.values()))
    lam0 = first.records[0].lam
    if lam0 and spec.envelopes:
        t_max = max(res.final.t for res in results.values())
        from .objectives import ProblemConstants

        fp = first.fingerprint
        constants = ProblemConstants(mu=fp["mu"], lip=fp["lip"], sc=fp["sc"], dim=fp["dim"])
        ts = np.arange(1, max(t_max, 2) + 1)
        for kind in spec.envelopes:
            env = RateEnvelope(kind, constants, 1.0)
            logs = np.array([envelope_value(env, int(t)).log_value for t in ts])
            vals = np.exp(np.clip(logs, math.log(floor), math.log(1e6)))
            ax_lam.semilogy(ts, vals, linestyle="--", alpha=0.7, label=kind.value)
    ax_lam.set_xlabel("iteration")
    ax_lam.set_ylabel("decrement ratio")
    ax_lam.set_ylim(bottom=floor)
    ax_lam.legend(fontsize=8)
    ax_lam.grid(True, which="both", alpha=0.3)
    if has_sigma:
        ax_sig = axes[1][0]
        for method, res in results.items():
            ts = [r.t for r in res.records if r.sigma is not None]
            sig = [max(r.sigma, floor) for r in res.records if r.sigma is not None]
            if ts:
                ax_sig.semilogy(ts, sig, label=method.value)
        ax_sig.set_xlabel("iteration")
        ax_sig.set_ylabel("trace gap")
        ax_sig.set_ylim(bottom=floor)
        ax_sig.legend(fontsize=8)
        ax_sig.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def run_experiment(spec: ExperimentSpec) -> ExperimentOutcome:
    """Run every method of the spec, certify, and write all artifacts."""
    oracle = spec.build_oracle()
    x0 = spec.x0 if spec.x0 is not None else default_x0(oracle.constants.dim)
    spec.out_dir.mkdir(parents=True, exist_ok=True)

    def one(method: Method) -> RunResult:
        return run(oracle, x0, spec.solver_config(method))

    workers = min(qn_threads(), len(spec.methods))
    results: dict[Method, RunResult] = {}
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {m: pool.submit(one, m) for m in spec.methods}
            # Merge in spec order so the outcome is independent of scheduling.
            for m in spec.methods:
                results[m] = futures[m].result()
    else:
        for m in spec.methods:
            results[m] = one(m)

    reports: dict[Method, CertificationReport] = {}
    for m, res in results.items():
        method_dir = spec.out_dir / m.value
        method_dir.mkdir(parents=True, exist_ok=True)
        report = certify_run(res)
        reports[m] = report
        write_trace(res, method_dir / "trace.csv")
        write_summary(res, report, method_dir / "summary.json")
        with open(method_dir / "certification.json", "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    with open(spec.out_dir / "experiment.json", "w", encoding="utf-8") as fh:
        json.dump(spec.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    plot_path = spec.out_dir / "plot.svg"
    plot_experiment(spec, results, plot_path)
    return ExperimentOutcome(spec=spec, results=results, reports=reports, plot_path=plot_path)


def certify_directory(out_dir) -> tuple[bool, dict[str, CertificationReport]]:
    """Re-certify every method run found under an experiment directory."""
    out_dir = Path(out_dir)
    reports: dict[str, CertificationReport] = {}
    for method_dir in sorted(p for p in out_dir.iterdir() if p.is_dir()):
        if not (method_dir / "trace.csv").exists():
            continue
        result = load_run(method_dir)
        reports[method_dir.name] = certify_run(result)
    if not reports:
        raise FileNotFoundError(f"no method traces under {out_dir}")
    return all(r.passed for r in reports.values()), reports
