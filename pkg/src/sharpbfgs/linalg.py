"""Dense symmetric positive-definite linear algebra substrate.

Everything downstream (curvature approximations, trace potentials, Newton
decrements) is built on SPD matrices with cached Cholesky factors and on a
handful of factor-based primitives: triangular solves, quadratic forms and
the trace of an inverse-matrix product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Relative pivot floor below which a matrix is treated as numerically
# indefinite rather than merely ill-conditioned.
PIVOT_RTOL = 1e-14


class NotPositiveDefinite(Exception):
    """Raised when a Cholesky pivot falls at or below the relative floor."""


class DegenerateDirection(Exception):
    """Raised when a direction-dependent quantity has a vanishing denominator."""


class DomainError(ValueError):
    """Raised when a scalar argument is outside a function's domain."""


def _symmetrize(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, order="C")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return (a + a.T) / 2.0


class SpdMatrix:
    """Dense symmetric positive-definite matrix with a cached Cholesky factor.

    Input is symmetrized on construction (rank-two updates accumulate
    asymmetric rounding). With ``check=True`` the factorization runs
    immediately so construction fails on non-SPD input; with ``check=False``
    (internal fast path for incrementally-maintained approximations) the
    factor is computed lazily on first use.

    Instances are immutable: all operations are pure and thread-safe.
    """

    __slots__ = ("a", "_chol")

    def __init__(self, entries, *, check: bool = True):
        self.a = _symmetrize(entries)
        self._chol = None
        if check:
            self.chol  # noqa: B018 - force factorization to validate SPD

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def chol(self) -> np.ndarray:
        """Lower-triangular L with ``a = L @ L.T``; cached after first call."""
        if self._chol is None:
            if not np.isfinite(self.a).all():
                raise NotPositiveDefinite("matrix has non-finite entries")
            try:
                L = scipy.linalg.cholesky(self.a, lower=True, check_finite=False)
            except scipy.linalg.LinAlgError as exc:
                raise NotPositiveDefinite(str(exc)) from exc
            # Cholesky pivots are the squares of the factor diagonal.
            max_diag = float(np.max(np.diag(self.a)))
            if np.min(np.diag(L)) ** 2 <= PIVOT_RTOL * max_diag:
                raise NotPositiveDefinite(
                    f"pivot below {PIVOT_RTOL:g} * max diagonal ({max_diag:g})"
                )
            self._chol = L
        return self._chol

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.a @ x

    def diagonal(self) -> np.ndarray:
        return np.diag(self.a).copy()

    def logdet(self) -> float:
        """log det, from the factor diagonal."""
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"SpdMatrix(dim={self.dim})"


@dataclass(frozen=True)
class UpperTriangular:
    """Upper-triangular factor with strictly positive diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.entries, dtype=np.float64)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {r.shape}")
        if not np.allclose(r, np.triu(r)):
            raise ValueError("matrix is not upper triangular")
        if np.min(np.diag(r)) <= 0.0:
            raise ValueError("diagonal must be strictly positive")
        object.__setattr__(self, "entries", r)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def as_spd(m, *, check: bool = True) -> SpdMatrix:
    """Coerce an array (or pass through an SpdMatrix) to SpdMatrix."""
    if isinstance(m, SpdMatrix):
        return m
    return SpdMatrix(m, check=check)


def inv_cholesky(m: SpdMatrix) -> UpperTriangular:
    """Upper-triangular R with ``inv(m) = R.T @ R``.

    Computed as the transposed lower Cholesky factor of the explicit inverse;
    the solvers that consume this recompute it per iteration, so the O(d^3)
    cost is accepted at dense desk scale.
    """
    inv = scipy.linalg.cho_solve((m.chol, True), np.eye(m.dim), check_finite=False)
    inv = (inv + inv.T) / 2.0
    try:
        lower = np.linalg.cholesky(inv)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - inverse of SPD is SPD
        raise NotPositiveDefinite(str(exc)) from exc
    return UpperTriangular(lower.T)


def solve(m: SpdMatrix, b: np.ndarray) -> np.ndarray:
    """Solve ``m x = b`` through the cached factor."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != m.dim:
        raise ValueError(f"dimension mismatch: matrix {m.dim}, vector {b.shape[0]}")
    return scipy.linalg.cho_solve((m.chol, True), b, check_finite=False)


def quad_form(m: SpdMatrix, u: np.ndarray) -> float:
    """The scalar ``u.T @ m @ u``."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape[0] != m.dim:
        raise ValueError(f"dimension mismatch: matrix {m.dim}, vector {u.shape[0]}")
    return float(u @ (m.a @ u))


def inv_quad_form(m: SpdMatrix, u: np.ndarray) -> float:
    """The scalar ``u.T @ inv(m) @ u``, as a guaranteed-nonnegative norm."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape[0] != m.dim:
        raise ValueError(f"dimension mismatch: matrix {m.dim}, vector {u.shape[0]}")
    w = scipy.linalg.solve_triangular(m.chol, u, lower=True, check_finite=False)
    return float(w @ w)


def trace_solve(a: SpdMatrix, g: SpdMatrix) -> float:
    """``trace(inv(a) @ g)`` for SPD a, g.

    Uses trace(inv(a) g) = ||inv(La) Lg||_F^2, which keeps the result
    nonnegative by construction.
    """
    if a.dim != g.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {g.dim}")
    w = scipy.linalg.solve_triangular(a.chol, g.chol, lower=True, check_finite=False)
    return float(np.sum(w * w))
