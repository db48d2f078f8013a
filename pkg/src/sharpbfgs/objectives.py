"""Objective oracles: quadratic programs and l2-regularized logistic loss.

An oracle bundles exactly the derivative information the solvers consume:
value, gradient, Hessian-vector product, Hessian diagonal, and (for
diagnostics) the assembled dense Hessian, together with the problem
constants mu (strong convexity), lip (gradient Lipschitz) and sc (strong
self-concordance).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import scipy.special

from .linalg import SpdMatrix, inv_quad_form, solve

EIG_VERIFY_RTOL = 1e-6
POWER_ITERS = 200


@dataclass(frozen=True)
class ProblemConstants:
    """Curvature constants of an objective."""

    mu: float
    lip: float
    sc: float
    dim: int

    def __post_init__(self):
        if not 0.0 < self.mu <= self.lip:
            raise ValueError(f"need 0 < mu <= lip, got mu={self.mu}, lip={self.lip}")
        if self.sc < 0.0:
            raise ValueError(f"self-concordance constant must be >= 0, got {self.sc}")

    @property
    def kappa(self) -> float:
        return self.lip / self.mu


class ObjectiveOracle(ABC):
    """Derivative-information bundle for one objective."""

    constants: ProblemConstants
    #: True when the Hessian does not depend on the evaluation point.
    hessian_is_constant: bool = False

    @abstractmethod
    def value(self, x: np.ndarray) -> float: ...

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def hess_vec(self, x: np.ndarray, v: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def hess_diag(self, x: np.ndarray) -> np.ndarray: ...

    def hess_full(self, x: np.ndarray) -> SpdMatrix:
        """Dense Hessian, assembled column-by-column unless overridden."""
        d = self.constants.dim
        cols = np.empty((d, d))
        eye = np.eye(d)
        for i in range(d):
            cols[:, i] = self.hess_vec(x, eye[i])
        return SpdMatrix(cols)


def _power_extremes(a: SpdMatrix, seed: int = 0) -> tuple[float, float]:
    """Estimate (lambda_min, lambda_max) by (inverse) power iteration.

    Rayleigh quotients approach the extremes from inside the spectrum, so the
    estimates are safe one-sided witnesses for bound verification.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.dim)
    v /= np.linalg.norm(v)
    lmax = 0.0
    for _ in range(POWER_ITERS):
        w = a.matvec(v)
        est = float(v @ w)
        w_norm = np.linalg.norm(w)
        if w_norm == 0.0:
            break
        v = w / w_norm
        if abs(est - lmax) <= EIG_VERIFY_RTOL * abs(est):
            lmax = est
            break
        lmax = est
    v = rng.standard_normal(a.dim)
    v /= np.linalg.norm(v)
    lmin = math.inf
    for _ in range(POWER_ITERS):
        w = solve(a, v)
        rq = float(v @ w)  # v' inv(a) v, maximized as lmin is approached
        est = 1.0 / rq if rq > 0 else 0.0
        w_norm = np.linalg.norm(w)
        if w_norm == 0.0:
            break
        v = w / w_norm
        if abs(est - lmin) <= EIG_VERIFY_RTOL * abs(est):
            lmin = est
            break
        lmin = est
    return lmin, lmax


class QuadraticProblem:
    """Quadratic objective ``0.5 x'Ax + b'x`` with mu I <= A <= lip I.

    Known exact curvature bounds can be supplied; they are verified against
    power-iteration witnesses at construction. Without them the witnesses
    become the constants.
    """

    def __init__(self, a: SpdMatrix, b: np.ndarray, mu: float | None = None, lip: float | None = None):
        if not isinstance(a, SpdMatrix):
            a = SpdMatrix(a)
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (a.dim,):
            raise ValueError(f"b must have shape ({a.dim},), got {b.shape}")
        lmin, lmax = _power_extremes(a)
        # The two Rayleigh witnesses can cross by an ulp on near-isotropic
        # spectra; order them before use.
        lmin = min(lmin, lmax)
        if mu is None:
            mu = lmin
        elif lmin < mu * (1.0 - EIG_VERIFY_RTOL):
            raise ValueError(f"smallest eigenvalue witness {lmin:g} violates mu={mu:g}")
        if lip is None:
            lip = lmax
        elif lmax > lip * (1.0 + EIG_VERIFY_RTOL):
            raise ValueError(f"largest eigenvalue witness {lmax:g} violates lip={lip:g}")
        self.a = a
        self.b = b
        self.mu = float(mu)
        self.lip = float(lip)


class QuadraticOracle(ObjectiveOracle):
    hessian_is_constant = True

    def __init__(self, problem: QuadraticProblem):
        self.problem = problem
        self.constants = ProblemConstants(
            mu=problem.mu, lip=problem.lip, sc=0.0, dim=problem.a.dim
        )

    def value(self, x):
        return 0.5 * float(x @ self.problem.a.matvec(x)) + float(self.problem.b @ x)

    def gradient(self, x):
        return self.problem.a.matvec(x) + self.problem.b

    def hess_vec(self, x, v):
        return self.problem.a.matvec(v)

    def hess_diag(self, x):
        return self.problem.a.diagonal()

    def hess_full(self, x):
        return self.problem.a

    def minimizer(self) -> np.ndarray:
        return solve(self.problem.a, -self.problem.b)


def quadratic_oracle(problem: QuadraticProblem) -> QuadraticOracle:
    return QuadraticOracle(problem)


class LogisticProblem:
    """Binary logistic regression data with l2 regularization.

    Rows must already be unit-norm (see ``datasets.normalize_rows``) and
    labels in {-1, +1}.
    """

    def __init__(self, z: np.ndarray, y: np.ndarray, mu_reg: float):
        z = np.asarray(z, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if z.ndim != 2 or y.shape != (z.shape[0],):
            raise ValueError(f"shape mismatch: z {z.shape}, y {y.shape}")
        norms = np.linalg.norm(z, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-10:
            raise ValueError("data rows must have unit Euclidean norm")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if mu_reg <= 0.0:
            raise ValueError(f"regularization must be positive, got {mu_reg}")
        self.z = z
        self.y = y
        self.mu_reg = float(mu_reg)


class LogisticOracle(ObjectiveOracle):
    def __init__(self, problem: LogisticProblem, sc: float | None = None):
        self.problem = problem
        n, d = problem.z.shape
        self.n = n
        mu = problem.mu_reg
        lip = 0.25 + mu
        if sc is None:
            # Conservative default from the Lipschitz-Hessian route; the
            # benchmark path runs with the correction off, leaving it unused.
            sc = math.sqrt(lip) * float(np.max(np.linalg.norm(problem.z, axis=1))) / math.sqrt(mu)
        self.constants = ProblemConstants(mu=mu, lip=lip, sc=sc, dim=d)
        # Margins enter every derivative through y_i * z_i.
        self._yz = problem.z * problem.y[:, None]

    def _weights(self, x):
        """Per-sample sigmoid curvature sig(t)(1 - sig(t)) at margins t."""
        t = self._yz @ x
        s = scipy.special.expit(t)
        return s, s * (1.0 - s)

    def value(self, x):
        t = self._yz @ x
        loss = float(np.mean(np.logaddexp(0.0, -t)))
        return loss + 0.5 * self.problem.mu_reg * float(x @ x)

    def gradient(self, x):
        t = self._yz @ x
        s = scipy.special.expit(t)
        return self._yz.T @ (s - 1.0) / self.n + self.problem.mu_reg * x

    def hess_vec(self, x, v):
        _, w = self._weights(x)
        return self._yz.T @ (w * (self._yz @ v)) / self.n + self.problem.mu_reg * v

    def hess_diag(self, x):
        _, w = self._weights(x)
        return (self._yz**2).T @ w / self.n + self.problem.mu_reg

    def hess_full(self, x):
        _, w = self._weights(x)
        h = (self._yz.T * w) @ self._yz / self.n
        h[np.diag_indices_from(h)] += self.problem.mu_reg
        return SpdMatrix(h)


def logistic_oracle(problem: LogisticProblem, sc: float | None = None) -> LogisticOracle:
    return LogisticOracle(problem, sc=sc)


def local_norm(oracle: ObjectiveOracle, z: np.ndarray, v: np.ndarray) -> float:
    """Hessian-weighted norm ``sqrt(v' H(z) v)`` via one hess_vec call."""
    return math.sqrt(max(float(v @ oracle.hess_vec(z, v)), 0.0))


def newton_decrement(oracle: ObjectiveOracle, x: np.ndarray) -> float:
    """``sqrt(g' inv(H) g)`` at x; zero exactly when the gradient vanishes."""
    g = oracle.gradient(x)
    h = oracle.hess_full(x)
    return math.sqrt(max(inv_quad_form(h, g), 0.0))


def averaged_hessian(oracle: ObjectiveOracle, x: np.ndarray, s: np.ndarray, nodes: int = 21) -> SpdMatrix:
    """Composite-Simpson average of the Hessian along the segment x -> x + s.

    Diagnostics only; solver paths never assemble this. Satisfies the secant
    identity (average Hessian times s equals the gradient difference) up to
    quadrature error.
    """
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError(f"nodes must be odd and >= 3, got {nodes}")
    x = np.asarray(x, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if oracle.hessian_is_constant or not np.any(s):
        return oracle.hess_full(x)
    h = 1.0 / (nodes - 1)
    acc = np.zeros((len(x), len(x)))
    for k in range(nodes):
        weight = 1.0 if k in (0, nodes - 1) else (4.0 if k % 2 == 1 else 2.0)
        acc += weight * oracle.hess_full(x + (k * h) * s).a
    return SpdMatrix(acc * (h / 3.0))
