"""Dense quasi-Newton solvers with convergence-rate certification.

The package bundles the classic secant-based update, its greedy
coordinate-direction variant, and the sharpened combination of the two
(plus a randomized-direction flavor), together with objective oracles,
theoretical rate envelopes and post-hoc inequality certification of
recorded runs.
"""

from .kernel import (
    DirectionQuery,
    HessianApproxState,
    bfgs_update,
    bfgs_update_secant,
    greedy_direction,
    omega,
    psi,
    random_direction,
    scale_state,
    sigma,
    theta,
)
from .linalg import (
    DegenerateDirection,
    DomainError,
    NotPositiveDefinite,
    SpdMatrix,
    UpperTriangular,
    inv_cholesky,
    quad_form,
    solve,
    trace_solve,
)
from .objectives import (
    LogisticProblem,
    ObjectiveOracle,
    ProblemConstants,
    QuadraticProblem,
    averaged_hessian,
    local_norm,
    logistic_oracle,
    newton_decrement,
    quadratic_oracle,
)
from .solvers import (
    IterationRecord,
    Method,
    RunResult,
    SolverConfig,
    TerminalReason,
    default_x0,
    run,
    run_bfgs,
    run_gd,
    run_greedy_bfgs,
    run_sharpened_general,
    run_sharpened_quadratic,
    run_sharpened_randomized,
)

__version__ = "0.1.0"
