"""Embedded property suite: seeded spot checks of the operator algebra,
potentials, solvers and trace round-trip, runnable without a test harness.

Each check returns (name, passed, detail); the CLI maps the aggregate onto
its exit code. The pytest suite covers the same ground (and much more); this
exists so a deployed installation can vouch for itself.
"""

from __future__ import annotations

import math
import tempfile
from pathlib import Path

import numpy as np
import scipy.linalg

from . import kernel
from .datasets import synth_quadratic
from .kernel import HessianApproxState
from .linalg import SpdMatrix, quad_form
from .objectives import quadratic_oracle
from .solvers import Method, SolverConfig, run

Check = tuple[str, bool, str]


def _random_dominating_pair(rng, d, spread=4.0):
    """Random SPD pair with a <= g, via g = a^(1/2) w a^(1/2), eig(w) >= 1."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    a = (q.T * np.exp(rng.uniform(0.0, 2.0, d))) @ q
    qa = scipy.linalg.sqrtm(a).real
    qw, _ = np.linalg.qr(rng.standard_normal((d, d)))
    w = (qw.T * (1.0 + rng.uniform(0.0, spread, d))) @ qw
    g = qa @ w @ qa
    return SpdMatrix(a), SpdMatrix((g + g.T) / 2.0)


def check_update_fixed_point() -> Check:
    rng = np.random.default_rng(0)
    a, _ = _random_dominating_pair(rng, 5)
    state = HessianApproxState(a)
    u = rng.standard_normal(5)
    new = state.apply(a.matvec(u), u)
    err = np.linalg.norm(new.g.a - a.a)
    return ("update fixed point at target", err <= 1e-10, f"max drift {err:.2e}")


def check_trace_gap_decrease(n: int = 200) -> Check:
    rng = np.random.default_rng(1)
    worst = math.inf
    for _ in range(n):
        a, g = _random_dominating_pair(rng, 4)
        u = rng.standard_normal(4)
        gap = kernel.sigma(a, g) - kernel.sigma(a, HessianApproxState(g).apply(a.matvec(u), u).g)
        lower = quad_form(g, u) / quad_form(a, u) - 1.0
        worst = min(worst, gap - lower)
    return ("trace-gap decrease lower bound", worst >= -1e-9, f"min slack {worst:.2e}")


def check_determinant_identity(n: int = 200) -> Check:
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(n):
        a, g = _random_dominating_pair(rng, 4)
        u = rng.standard_normal(4)
        g_new = HessianApproxState(g).apply(a.matvec(u), u).g
        lhs = g_new.logdet() - g.logdet()
        rhs = math.log(quad_form(a, u) / quad_form(g, u))
        worst = max(worst, abs(lhs - rhs))
    return ("rank-two determinant identity", worst <= 1e-8, f"max err {worst:.2e}")


def check_inverse_maintenance(n: int = 200) -> Check:
    rng = np.random.default_rng(3)
    d = 20
    a, _ = _random_dominating_pair(rng, d)
    state = HessianApproxState(SpdMatrix(10.0 * np.eye(d) * np.max(np.diag(a.a))))
    worst = 0.0
    for _ in range(n):
        s = rng.standard_normal(d)
        state = kernel.bfgs_update_secant(state, s, a.matvec(s))
        worst = max(worst, state.inverse_drift())
    tol = 1e-7 * math.sqrt(d)
    return ("inverse maintenance drift", worst <= tol, f"max ||GH-I|| {worst:.2e}")


def check_solver_contraction() -> Check:
    problem = synth_quadratic(10, 50.0, seed=5)
    oracle = quadratic_oracle(problem)
    x0 = np.full(10, 10.0 ** -1.5)
    cfg = SolverConfig(method=Method.SHARPENED_QUADRATIC, max_iters=200)
    res = run(oracle, x0, cfg)
    lams = [r.lam for r in res.records]
    bound = 1.0 - oracle.constants.mu / oracle.constants.lip
    ok = all(
        l1 <= bound * l0 + 1e-8 for l0, l1 in zip(lams, lams[1:]) if l0 is not None
    )
    return (
        "sharpened linear contraction",
        ok and res.final.lam < 1e-10 * lams[0],
        f"{res.final.t} iterations, final ratio {res.final.lam / lams[0]:.2e}",
    )


def check_trace_determinism() -> Check:
    from .experiment import ExperimentSpec, run_experiment

    with tempfile.TemporaryDirectory() as tmp:
        raw = []
        for sub in ("a", "b"):
            spec = ExperimentSpec(
                problem_kind="quadratic",
                methods=[Method.BFGS],
                out_dir=Path(tmp) / sub,
                dim=8,
                kappa=10.0,
                problem_seed=7,
                max_iters=60,
            )
            run_experiment(spec)
            raw.append((Path(tmp) / sub / "bfgs" / "trace.csv").read_bytes())
        same = raw[0] == raw[1]
    return ("trace byte determinism", same, "byte-identical" if same else "MISMATCH")


ALL_CHECKS = (
    check_update_fixed_point,
    check_trace_gap_decrease,
    check_determinant_identity,
    check_inverse_maintenance,
    check_solver_contraction,
    check_trace_determinism,
)


def run_all(verbose: bool = True) -> bool:
    ok = True
    for fn in ALL_CHECKS:
        name, passed, detail = fn()
        ok &= passed
        if verbose:
            print(f"[{'pass' if passed else 'FAIL'}] {name}: {detail}")
    return ok
