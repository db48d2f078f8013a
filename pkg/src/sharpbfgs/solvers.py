"""Iterate-generating methods: gradient descent, classic BFGS, greedy BFGS,
and the sharpened (secant-then-greedy) variants for quadratic and general
objectives, including the randomized-direction flavor.

All quasi-Newton methods take unit steps ``x+ = x - H g`` from the maintained
inverse approximation and start from ``G0 = lip * I``. Per-iteration
diagnostics (Newton decrement, trace gap, directional mismatch, local step
norm) are recorded for downstream rate certification.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .kernel import DirectionQuery, HessianApproxState
from .linalg import (
    DegenerateDirection,
    NotPositiveDefinite,
    SpdMatrix,
    inv_cholesky,
    inv_quad_form,
    trace_solve,
)
from .objectives import ObjectiveOracle, averaged_hessian, local_norm

logger = logging.getLogger(__name__)


class Method(str, enum.Enum):
    GD = "gd"
    BFGS = "bfgs"
    GREEDY_BFGS = "greedy"
    SHARPENED_QUADRATIC = "sharpened-quadratic"
    SHARPENED_GENERAL = "sharpened"
    SHARPENED_RANDOMIZED = "sharpened-randomized"


QUASI_NEWTON_METHODS = tuple(m for m in Method if m is not Method.GD)
_SHARPENED = (
    Method.SHARPENED_QUADRATIC,
    Method.SHARPENED_GENERAL,
    Method.SHARPENED_RANDOMIZED,
)


class TerminalReason(str, enum.Enum):
    GRAD_TOL = "grad_tol"
    LAMBDA_TOL = "lambda_tol"
    MAX_ITERS = "max_iters"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverConfig:
    """Method selection plus stopping, correction and diagnostics knobs."""

    method: Method
    max_iters: int = 500
    #: None resolves to 1e-12 * max(1, ||grad(x0)||) at run start.
    tol_grad: float | None = None
    #: 0 disables Newton-decrement stopping.
    tol_lambda: float = 0.0
    #: Apply the local-norm inflation before the greedy/random update.
    correction_enabled: bool = False
    rng_seed: int = 0
    #: Record full diagnostics every this many iterations; 0 disables them.
    diagnostics_stride: int = 1
    quadrature_nodes: int = 21
    #: On non-quadratic paths, also record the directional mismatch against
    #: the averaged Hessian (one quadrature per iteration; diagnostics only).
    theta_general: bool = False
    record_x: bool = False
    #: Off keeps wall_nanos at 0 so traces are byte-stable across runs.
    measure_time: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol_grad is not None and self.tol_grad < 0:
            raise ValueError("tol_grad must be >= 0")
        if self.tol_lambda < 0:
            raise ValueError("tol_lambda must be >= 0")
        if self.diagnostics_stride < 0:
            raise ValueError("diagnostics_stride must be >= 0")


@dataclass
class IterationRecord:
    """State of the run at iterate t, plus the t -> t+1 transition data."""

    t: int
    f: float
    grad_norm: float
    lam: float | None = None
    sigma: float | None = None
    theta: float | None = None
    r: float | None = None
    wall_nanos: int = 0
    skipped_update: bool = False
    x: np.ndarray | None = None


@dataclass
class RunResult:
    records: list[IterationRecord]
    terminal_reason: TerminalReason
    config: SolverConfig
    fingerprint: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.records:
            raise ValueError("a run must produce at least one record")

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    def column(self, name: str) -> list:
        return [getattr(rec, name) for rec in self.records]


def problem_fingerprint(oracle: ObjectiveOracle) -> dict:
    c = oracle.constants
    fp = {
        "kind": type(oracle).__name__.removesuffix("Oracle").lower(),
        "dim": c.dim,
        "mu": c.mu,
        "lip": c.lip,
        "sc": c.sc,
    }
    h = hashlib.sha256()
    problem = getattr(oracle, "problem", None)
    if problem is not None:
        for name in ("a", "b", "z", "y"):
            arr = getattr(problem, name, None)
            if arr is not None:
                h.update(np.ascontiguousarray(arr.a if isinstance(arr, SpdMatrix) else arr))
        if hasattr(problem, "z"):
            fp["n_samples"] = problem.z.shape[0]
    fp["data_sha256"] = h.hexdigest()
    return fp


def default_x0(dim: int) -> np.ndarray:
    """Benchmark-protocol initial point ``d**-1.5 * ones``."""
    return np.full(dim, dim**-1.5)


class _Clock:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.start = time.perf_counter_ns() if enabled else 0

    def nanos(self) -> int:
        return time.perf_counter_ns() - self.start if self.enabled else 0


def _finite(*values) -> bool:
    return all(np.all(np.isfinite(v)) for v in values)


class _Loop:
    """Shared driver: stopping logic, diagnostics and trace recording."""

    def __init__(self, oracle: ObjectiveOracle, x0, config: SolverConfig):
        self.oracle = oracle
        self.config = config
        self.x = np.array(x0, dtype=np.float64)
        if self.x.shape != (oracle.constants.dim,):
            raise ValueError(
                f"x0 must have shape ({oracle.constants.dim},), got {self.x.shape}"
            )
        self.g = oracle.gradient(self.x)
        self.tol_grad = config.tol_grad
        if self.tol_grad is None:
            self.tol_grad = 1e-12 * max(1.0, float(np.linalg.norm(self.g)))
        self.clock = _Clock(config.measure_time)
        self.records: list[IterationRecord] = []
        self.rng = np.random.default_rng(config.rng_seed)
        self.quadratic = oracle.hessian_is_constant
        # Quadratic targets keep one factored Hessian for all diagnostics.
        self.hess_t: SpdMatrix | None = None

    def diagnostics_on(self, t: int) -> bool:
        stride = self.config.diagnostics_stride
        return stride > 0 and t % stride == 0

    def begin_record(self, t: int, state: HessianApproxState | None) -> IterationRecord | None:
        """Record value/gradient/decrement/trace-gap at the current iterate.

        Returns None when the current iterate is non-finite (the previous
        record then stays the last good one).
        """
        f = self.oracle.value(self.x)
        gn = float(np.linalg.norm(self.g))
        if not _finite(self.x, f, gn):
            return None
        rec = IterationRecord(t=t, f=f, grad_norm=gn)
        want_diag = self.diagnostics_on(t)
        if want_diag or self.config.tol_lambda > 0.0:
            self.hess_t = self.oracle.hess_full(self.x)
            rec.lam = math.sqrt(max(inv_quad_form(self.hess_t, self.g), 0.0))
        if want_diag and state is not None:
            rec.sigma = trace_solve(self.hess_t, state.g) - self.oracle.constants.dim
        if self.config.record_x:
            rec.x = self.x.copy()
        return rec

    def finish_record(self, rec: IterationRecord):
        rec.wall_nanos = self.clock.nanos()
        self.records.append(rec)

    def record_theta(self, rec: IterationRecord, state: HessianApproxState, s: np.ndarray):
        """Directional mismatch of G_t along the step, against the exact
        target on quadratics or the averaged Hessian when requested."""
        if rec.lam is None or not np.any(s):
            return
        try:
            if self.quadratic:
                rec.theta = kernel.theta(self.hess_t, state.g, s)
            elif self.config.theta_general:
                j = averaged_hessian(self.oracle, self.x, s, self.config.quadrature_nodes)
                rec.theta = kernel.theta(j, state.g, s)
        except (DegenerateDirection, NotPositiveDefinite):
            rec.theta = None

    def result(self, reason: TerminalReason) -> RunResult:
        return RunResult(
            records=self.records,
            terminal_reason=reason,
            config=self.config,
            fingerprint=problem_fingerprint(self.oracle),
        )


def _run_gd(loop: _Loop) -> RunResult:
    cfg, oracle = loop.config, loop.oracle
    step = 1.0 / oracle.constants.lip
    for t in range(cfg.max_iters + 1):
        rec = loop.begin_record(t, state=None)
        if rec is None:
            return loop.result(TerminalReason.NUMERICAL_FAILURE)
        loop.finish_record(rec)
        if rec.grad_norm <= loop.tol_grad:
            return loop.result(TerminalReason.GRAD_TOL)
        if cfg.tol_lambda > 0.0 and rec.lam is not None and rec.lam <= cfg.tol_lambda:
            return loop.result(TerminalReason.LAMBDA_TOL)
        if t == cfg.max_iters:
            break
        loop.x = loop.x - step * loop.g
        loop.g = oracle.gradient(loop.x)
    return loop.result(TerminalReason.MAX_ITERS)


def _greedy_target_update(
    loop: _Loop, state: HessianApproxState, x_new: np.ndarray
) -> HessianApproxState:
    """One greedy coordinate update of the state against the Hessian at x_new."""
    oracle = loop.oracle
    a_diag = oracle.hess_diag(x_new)
    query = DirectionQuery(a_diag, lambda i: oracle.hess_vec(x_new, _unit(loop, i)))
    i = kernel.greedy_direction(query, np.diag(state.g.a))
    return state.apply(query.a_column(i), _unit(loop, i))


def _unit(loop: _Loop, i: int) -> np.ndarray:
    e = np.zeros(loop.oracle.constants.dim)
    e[i] = 1.0
    return e


def _run_quasi_newton(loop: _Loop) -> RunResult:
    cfg, oracle = loop.config, loop.oracle
    method = cfg.method
    d = oracle.constants.dim
    sc = oracle.constants.sc
    state = HessianApproxState(SpdMatrix(oracle.constants.lip * np.eye(d)))

    for t in range(cfg.max_iters + 1):
        rec = loop.begin_record(t, state)
        if rec is None:
            return loop.result(TerminalReason.NUMERICAL_FAILURE)
        if rec.grad_norm <= loop.tol_grad:
            loop.finish_record(rec)
            return loop.result(TerminalReason.GRAD_TOL)
        if cfg.tol_lambda > 0.0 and rec.lam is not None and rec.lam <= cfg.tol_lambda:
            loop.finish_record(rec)
            return loop.result(TerminalReason.LAMBDA_TOL)
        if t == cfg.max_iters:
            loop.finish_record(rec)
            break

        # Unit quasi-Newton step from the maintained inverse.
        s = -(state.h @ loop.g)
        x_new = loop.x + s
        g_new = oracle.gradient(x_new)
        if not _finite(x_new, g_new):
            loop.finish_record(rec)
            return loop.result(TerminalReason.NUMERICAL_FAILURE)
        if loop.diagnostics_on(t):
            loop.record_theta(rec, state, s)
            if np.any(s):
                rec.r = local_norm(oracle, loop.x, s)
        try:
            count_before = state.update_count
            n_updates = 2 if method in _SHARPENED else 1
            if method is Method.SHARPENED_QUADRATIC:
                state = state.apply(oracle.hess_vec(loop.x, s), s)
            elif method is not Method.GREEDY_BFGS:
                state = kernel.bfgs_update_secant(state, s, g_new - loop.g)
            if method is not Method.BFGS:
                if cfg.correction_enabled and sc > 0.0:
                    r = rec.r if rec.r is not None else local_norm(oracle, loop.x, s)
                    state = state.scaled((1.0 + 0.5 * sc * r) ** 2)
                if method is Method.SHARPENED_RANDOMIZED:
                    u = kernel.random_direction(inv_cholesky(state.g), loop.rng)
                    state = state.apply(oracle.hess_vec(x_new, u), u)
                else:
                    state = _greedy_target_update(loop, state, x_new)
            rec.skipped_update = state.update_count < count_before + n_updates
        except NotPositiveDefinite:
            logger.warning("approximation lost positive definiteness at t=%d", t)
            loop.finish_record(rec)
            return loop.result(TerminalReason.NUMERICAL_FAILURE)
        loop.x = x_new
        loop.g = g_new
        loop.finish_record(rec)
    return loop.result(TerminalReason.MAX_ITERS)


def _run(oracle: ObjectiveOracle, x0, config: SolverConfig, method: Method) -> RunResult:
    config = dataclasses.replace(config, method=method)
    if method is Method.SHARPENED_QUADRATIC and not oracle.hessian_is_constant:
        raise ValueError("the quadratic-specialized method requires a constant Hessian")
    loop = _Loop(oracle, x0, config)
    if method is Method.GD:
        return _run_gd(loop)
    return _run_quasi_newton(loop)


def run_gd(oracle, x0, config: SolverConfig) -> RunResult:
    return _run(oracle, x0, config, Method.GD)


def run_bfgs(oracle, x0, config: SolverConfig) -> RunResult:
    return _run(oracle, x0, config, Method.BFGS)


def run_greedy_bfgs(oracle, x0, config: SolverConfig) -> RunResult:
    return _run(oracle, x0, config, Method.GREEDY_BFGS)


def run_sharpened_quadratic(oracle, x0, config: SolverConfig) -> RunResult:
    return _run(oracle, x0, config, Method.SHARPENED_QUADRATIC)


def run_sharpened_general(oracle, x0, config: SolverConfig) -> RunResult:
    return _run(oracle, x0, config, Method.SHARPENED_GENERAL)


def run_sharpened_randomized(oracle, x0, config: SolverConfig) -> RunResult:
    return _run(oracle, x0, config, Method.SHARPENED_RANDOMIZED)


def run(oracle, x0, config: SolverConfig) -> RunResult:
    """Dispatch on ``config.method``."""
    return _run(oracle, x0, config, config.method)
