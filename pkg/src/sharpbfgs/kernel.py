"""Rank-two curvature-approximation updates and their progress potentials.

The core operator takes an SPD target A, a current approximation G and a
direction u, and replaces G's action along u with A's:

    G+ = G - (G u)(G u)^T / (u^T G u) + (A u)(A u)^T / (u^T A u)

so that G+ u = A u. The inverse H = inv(G) is maintained alongside through
the matching rank-two identity, keeping per-update cost at O(d^2). The
potentials sigma (trace gap), theta (directional mismatch) and psi / omega
(log-det regularized variants) quantify how far G is from A and how much a
single update closes the gap; the greedy and randomized direction rules
choose u to force the gap to zero.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import (
    DegenerateDirection,
    DomainError,
    SpdMatrix,
    UpperTriangular,
    as_spd,
    inv_quad_form,
)

logger = logging.getLogger(__name__)

# Directions whose curvature pairing falls below these floors carry no usable
# information in double precision; the update is skipped rather than damped so
# the exact update algebra is preserved on the applied steps.
DEGENERATE_RTOL = 1e-14
CURVATURE_RTOL = 1e-12

# Inverse-maintenance drift monitor: refactorize H when ||G H - I||_F exceeds
# this multiple of sqrt(d).
H_DRIFT_RTOL = 1e-7


class HessianApproxState:
    """A curvature approximation G paired with its maintained inverse H.

    The pair is updated jointly: ``apply`` performs one rank-two operator
    update on both, ``scaled`` multiplies G (and divides H) by a scalar.
    States are treated as immutable; updates return new instances. A drift
    monitor refactorizes H outright if accumulated rounding in the
    incremental maintenance ever exceeds the tolerance.
    """

    __slots__ = ("g", "h", "update_count")

    def __init__(self, g, h: np.ndarray | None = None, update_count: int = 0):
        self.g = as_spd(g, check=h is None)
        if h is None:
            lower = self.g.chol
            inv = np.linalg.inv(lower)
            h = inv.T @ inv
        self.h = (h + h.T) / 2.0
        self.update_count = update_count

    @property
    def dim(self) -> int:
        return self.g.dim

    def inverse_drift(self) -> float:
        """``||G H - I||_F``, the maintained-inverse consistency residual."""
        return float(np.linalg.norm(self.g.a @ self.h - np.eye(self.dim)))

    def apply(self, au: np.ndarray, u: np.ndarray) -> "HessianApproxState":
        return bfgs_update(self, au, u)

    def scaled(self, factor: float) -> "HessianApproxState":
        return scale_state(self, factor)


@dataclass(frozen=True)
class DirectionQuery:
    """Access pattern for the coordinate-direction candidate set of a target
    operator: its diagonal, plus a callback returning single columns."""

    a_diag: np.ndarray
    a_column: Callable[[int], np.ndarray]

    def __post_init__(self):
        d = np.asarray(self.a_diag, dtype=np.float64)
        if np.min(d) <= 0.0:
            raise ValueError("target diagonal must be strictly positive")
        object.__setattr__(self, "a_diag", d)


def bfgs_update(state: HessianApproxState, au: np.ndarray, u: np.ndarray) -> HessianApproxState:
    """One rank-two update of (G, H) matching the target's action along u.

    ``au`` must be the target operator applied to ``u``. Returns the state
    unchanged (and logs) when either curvature pairing is degenerate.
    """
    u = np.asarray(u, dtype=np.float64)
    au = np.asarray(au, dtype=np.float64)
    g = state.g.a
    gu = g @ u
    ugu = float(u @ gu)
    uau = float(u @ au)
    floor = DEGENERATE_RTOL * float(u @ u)
    if ugu <= floor or uau <= floor:
        logger.warning(
            "degenerate update direction skipped (u'Gu=%.3e, u'Au=%.3e)", ugu, uau
        )
        return state

    g_new = g - np.outer(gu, gu) / ugu + np.outer(au, au) / uau

    # Inverse counterpart: H+ = (I - u au^T/w) H (I - au u^T/w) + u u^T / w.
    h = state.h
    hau = h @ au
    coef = float(au @ hau)
    h_new = (
        h
        - (np.outer(u, hau) + np.outer(hau, u)) / uau
        + np.outer(u, u) * ((coef + uau) / (uau * uau))
    )

    new = HessianApproxState(
        SpdMatrix(g_new, check=False), h_new, state.update_count + 1
    )
    if new.inverse_drift() > H_DRIFT_RTOL * math.sqrt(new.dim):
        new = HessianApproxState(SpdMatrix(g_new, check=True), None, new.update_count)
    return new


def bfgs_update_secant(state: HessianApproxState, s: np.ndarray, y: np.ndarray) -> HessianApproxState:
    """Rank-two update from a step / gradient-difference pair.

    Equivalent to ``bfgs_update`` with the averaged curvature along the step
    as the implicit target (``au = y``, ``u = s``), so the updated G satisfies
    ``G s = y``. Skips (and logs) when the curvature pairing ``s.y`` is below
    the relative floor.
    """
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sy = float(s @ y)
    if sy <= CURVATURE_RTOL * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
        logger.warning("curvature pair skipped (s'y=%.3e)", sy)
        return state
    return bfgs_update(state, y, s)


def scale_state(state: HessianApproxState, factor: float) -> HessianApproxState:
    """Multiply G by ``factor`` (>= 1) and divide H accordingly."""
    if factor < 1.0:
        raise ValueError(f"scaling factor must be >= 1, got {factor}")
    if factor == 1.0:
        return state
    return HessianApproxState(
        SpdMatrix(state.g.a * factor, check=False),
        state.h / factor,
        state.update_count,
    )


def sigma(a: SpdMatrix, g) -> float:
    """Trace gap ``trace(inv(a) g) - d``; zero iff g == a when a <= g."""
    from .linalg import trace_solve

    g = as_spd(g)
    return trace_solve(a, g) - a.dim


def theta(a: SpdMatrix, g, u: np.ndarray) -> float:
    """Normalized mismatch of g against a along u, in inv(a) geometry.

    sqrt( u'(G-A) inv(A) (G-A) u / u' G inv(A) G u ); zero when G u = A u.
    """
    g = np.asarray(g.a if isinstance(g, SpdMatrix) else g, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    gu = g @ u
    diff = gu - a.a @ u
    den = inv_quad_form(a, gu)
    if den <= 1e-300:
        raise DegenerateDirection(f"vanishing denominator ({den:g})")
    num = inv_quad_form(a, diff)
    return math.sqrt(max(num, 0.0) / den)


def psi(a: SpdMatrix, g) -> float:
    """Log-det regularized trace gap: sigma(a, g) - logdet(inv(a) g) >= 0."""
    g = as_spd(g)
    return sigma(a, g) - (g.logdet() - a.logdet())


def omega(t: float) -> float:
    """The scalar potential ``t - log(1 + t)`` on (-1, inf)."""
    if t <= -1.0 + 1e-12:
        raise DomainError(f"argument must exceed -1, got {t}")
    return t - math.log1p(t)


def greedy_direction(query: DirectionQuery, g_diag: np.ndarray) -> int:
    """Coordinate index maximizing the diagonal ratio g/a (ties: lowest)."""
    ratio = np.asarray(g_diag, dtype=np.float64) / query.a_diag
    return int(np.argmax(ratio))


def random_direction(r: UpperTriangular, rng: np.random.Generator) -> np.ndarray:
    """Direction ``R.T @ z`` with z standard normal, i.e. N(0, R.T R).

    With R from ``inv_cholesky(G)`` the draw has covariance inv(G).
    """
    z = rng.standard_normal(r.dim)
    return r.entries.T @ z
