"""Weighted-l1 recovery of sparse initial states, plus the exhaustive
combinatorial oracle used to sanity-check it at desk scale.

The core solve is weighted basis-pursuit denoising on a linearization of the
flow map: min sum_i w_i |x_i| subject to ||observation - offset - Phi x|| <=
eps.  Systems with an affine flow need a single linearization; the saturated
catalog member re-linearizes around the current estimate until the step
stalls.  The noisy case runs ADMM on the penalized form and bisects the
penalty weight until the residual lands just above eps, which keeps the
returned point both feasible-within-tolerance and objective-dominated by any
true feasible point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BudgetError, DomainError, InfeasibleError, ShapeError
from .model import RecoveryOutcome, SparseProblem, weighted_l1_norm
from .ode import IntegrationConfig, flow_with_jacobian, integrate

# linearizing at a single point is exact for these kinds
_AFFINE_FLOW_KINDS = ("zero", "linear", "affine")

DEFAULT_ORACLE_BUDGET = 100_000

# slack on the oracle's feasibility test, well under every reporting tolerance
_ORACLE_FEAS_SLACK = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the recovery solvers.

    outer_* control the re-linearization loop, inner_* the ADMM iterations,
    penalty is the ADMM step weight, and residual_match_tol is the slack
    allowed between the achieved residual and the target eps.
    """

    outer_max_iter: int = 30
    outer_tol: float = 1e-8
    inner_max_iter: int = 5000
    inner_tol: float = 1e-9
    penalty: float = 1.0
    residual_match_tol: float = 1e-6

    def __post_init__(self):
        if int(self.outer_max_iter) < 1 or int(self.inner_max_iter) < 1:
            raise DomainError("iteration limits must be >= 1")
        object.__setattr__(self, "outer_max_iter", int(self.outer_max_iter))
        object.__setattr__(self, "inner_max_iter", int(self.inner_max_iter))
        for name in ("outer_tol", "inner_tol", "penalty", "residual_match_tol"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def from_dict(cls, doc):
        known = {
            "outer_max_iter",
            "outer_tol",
            "inner_max_iter",
            "inner_tol",
            "penalty",
            "residual_match_tol",
        }
        extra = set(doc) - known
        if extra:
            raise DomainError(f"unknown solver config fields: {sorted(extra)}")
        return cls(**doc)


def _check_bpdn_args(Phi, offset, observation, weights, eps):
    Phi = np.ascontiguousarray(Phi, dtype=float)
    if Phi.ndim != 2:
        raise ShapeError(f"Phi must be 2-d, got shape {Phi.shape}")
    n, m = Phi.shape
    offset = np.asarray(offset, dtype=float)
    observation = np.asarray(observation, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    if offset.shape != (n,) or observation.shape != (n,):
        raise ShapeError(
            f"offset and observation must have shape ({n},), "
            f"got {offset.shape} and {observation.shape}"
        )
    if weights.shape != (m,):
        raise ShapeError(f"weights must have shape ({m},), got {weights.shape}")
    if np.any(weights <= 0):
        raise DomainError("weights must be strictly positive")
    eps = float(eps)
    if not (math.isfinite(eps) and eps >= 0):
        raise DomainError(f"eps must be nonnegative and finite, got {eps}")
    return Phi, offset, observation, weights, eps


def solve_weighted_bpdn(Phi, offset, observation, weights, eps, config=None):
    """Minimize sum_i weights_i |x_i| subject to
    ||observation - offset - Phi x||_2 <= eps, returning the m-vector x.

    eps = 0 runs projection ADMM on the equality-constrained program.  eps > 0
    runs penalized ADMM and bisects the penalty weight until the residual
    lands in [eps, eps + residual_match_tol], approaching from above so the
    solution's objective never exceeds that of any strictly feasible point.
    Raises InfeasibleError when even least squares cannot reach eps.
    """
    cfg = config or SolverConfig()
    Phi, offset, observation, weights, eps = _check_bpdn_args(
        Phi, offset, observation, weights, eps
    )
    n, m = Phi.shape
    y = observation - offset
    y_norm = float(np.linalg.norm(y))
    if y_norm <= eps:
        return np.zeros(m)

    x_ls, *_ = np.linalg.lstsq(Phi, y, rcond=None)
    r_min = float(np.linalg.norm(y - Phi @ x_ls))
    feas_slack = 1e-9 * max(1.0, y_norm)
    if r_min > eps + feas_slack:
        raise InfeasibleError(
            f"no vector reaches residual {eps:.6g}; the least-squares "
            f"residual is {r_min:.6g}",
            min_residual=r_min,
        )

    rho = cfg.penalty
    if eps == 0.0:
        Phi_pinv = np.ascontiguousarray(np.linalg.pinv(Phi))
        x, z, _, _ = kernels.admm_basis_pursuit(
            Phi,
            Phi_pinv,
            y,
            weights / rho,
            np.zeros(m),
            np.zeros(m),
            cfg.inner_max_iter,
            cfg.inner_tol,
        )
        return z

    F_inv = np.ascontiguousarray(np.linalg.inv(Phi.T @ Phi + rho * np.eye(m)))
    Phi_t_y = Phi.T @ y
    lam_hi = float(np.max(np.abs(Phi_t_y) / weights))
    # lam_hi makes x = 0 optimal, whose residual y_norm exceeds eps
    band = min(cfg.residual_match_tol, 1e-9 * max(1.0, y_norm))
    z = np.zeros(m)
    u = np.zeros(m)
    best_r = y_norm
    best_z = z.copy()
    lam_lo = 0.0
    for _ in range(40):
        lam = 0.5 * (lam_lo + lam_hi)
        z, u, _ = kernels.admm_lasso(
            F_inv,
            Phi_t_y,
            rho,
            lam * weights / rho,
            z,
            u,
            cfg.inner_max_iter,
            cfg.inner_tol,
        )
        r = float(np.linalg.norm(y - Phi @ z))
        if r >= eps and r < best_r:
            best_r = r
            best_z = z.copy()
        if eps <= r <= eps + band:
            return z
        if r > eps:
            lam_hi = lam
        else:
            lam_lo = lam
    return best_z


def _true_residual(problem, x, icfg):
    xT = integrate(problem.system, x, problem.measurement.time, icfg).final_state
    return float(np.linalg.norm(problem.observation - problem.measurement.matrix @ xT))


def recover_initial_state(
    problem: SparseProblem,
    integration_config: IntegrationConfig | None = None,
    solver_config: SolverConfig | None = None,
) -> RecoveryOutcome:
    """Estimate the initial state by weighted basis-pursuit denoising on the
    linearized flow.

    Systems with an affine flow converge in one (exact) linearization.  The
    saturated system re-linearizes around the current estimate, damping each
    step until the true residual stays within eps + residual_match_tol, and
    stops once the accepted step is shorter than outer_tol.  converged
    reports whether both the step and the residual criteria were met.
    """
    icfg = integration_config or IntegrationConfig()
    scfg = solver_config or SolverConfig()
    meas = problem.measurement
    A = meas.matrix
    eps = meas.noise_radius
    w = meas.weights
    b = problem.observation
    system = problem.system
    T = meas.time
    m = system.dim

    if system.kind in _AFFINE_FLOW_KINDS:
        xT0, P = flow_with_jacobian(system, np.zeros(m), T, icfg)
        est = solve_weighted_bpdn(A @ P, A @ xT0, b, w, eps, scfg)
        residual = _true_residual(problem, est, icfg)
        return RecoveryOutcome(
            estimate=est,
            residual=residual,
            weighted_l1=weighted_l1_norm(est, w),
            iterations=1,
            converged=residual <= eps + scfg.residual_match_tol,
        )

    x = np.zeros(m)
    r_cur = _true_residual(problem, x, icfg)
    step_small = False
    iterations = 0
    for _ in range(scfg.outer_max_iter):
        iterations += 1
        xT, P = flow_with_jacobian(system, x, T, icfg)
        Phi = A @ P
        proposal = solve_weighted_bpdn(Phi, A @ xT - Phi @ x, b, w, eps, scfg)
        step = proposal - x
        step_norm = float(np.linalg.norm(step))
        # damp toward the current point until the true residual is acceptable
        t = 1.0
        accepted = False
        while t >= 2.0**-30:
            x_try = x + t * step
            r_try = _true_residual(problem, x_try, icfg)
            if r_try <= max(r_cur, eps + scfg.residual_match_tol):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x = x_try
        r_cur = r_try
        if t * step_norm < scfg.outer_tol:
            step_small = True
            break

    return RecoveryOutcome(
        estimate=x,
        residual=r_cur,
        weighted_l1=weighted_l1_norm(x, w),
        iterations=iterations,
        converged=step_small and r_cur <= eps + scfg.residual_match_tol,
    )


def _support_fit(system, A, b, T, icfg, support):
    """Damped Gauss-Newton fit of the initial state restricted to support,
    starting from zero.  Returns (full state, residual norm)."""
    m = system.dim
    b_scale = max(1.0, float(np.linalg.norm(b)))
    x = np.zeros(m)
    xT, P = flow_with_jacobian(system, x, T, icfg)
    r = b - A @ xT
    rn = float(np.linalg.norm(r))
    if len(support) == 0:
        return x, rn
    cols = np.array(support, dtype=np.intp)
    for _ in range(60):
        if rn <= 1e-14 * b_scale:
            break
        J = (A @ P)[:, cols]
        step, *_ = np.linalg.lstsq(J, r, rcond=None)
        if float(np.linalg.norm(step)) <= 1e-13 * max(1.0, float(np.linalg.norm(x))):
            break
        t = 1.0
        accepted = False
        while t >= 2.0**-20:
            x_try = x.copy()
            x_try[cols] += t * step
            xT_try, P_try = flow_with_jacobian(system, x_try, T, icfg)
            r_try = b - A @ xT_try
            rn_try = float(np.linalg.norm(r_try))
            if rn_try < rn:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x, xT, P, r, rn = x_try, xT_try, P_try, r_try, rn_try
    return x, rn


def l0_oracle(
    problem: SparseProblem,
    integration_config: IntegrationConfig | None = None,
    budget: int = DEFAULT_ORACLE_BUDGET,
) -> RecoveryOutcome:
    """Exhaustive sparse recovery: fit the initial state on every support of
    size 0..sparsity (lexicographic order, sizes ascending) by restricted
    nonlinear least squares and return the first feasible fit, preferring
    smaller supports, then smaller residuals, then earlier supports.

    Refuses with BudgetError when the support count exceeds budget.  When no
    support reaches the noise radius, returns the best fit found with
    converged=False.  iterations counts the supports examined.
    """
    icfg = integration_config or IntegrationConfig()
    budget = int(budget)
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    m = problem.system.dim
    s = problem.sparsity
    total = sum(math.comb(m, k) for k in range(s + 1))
    if total > budget:
        raise BudgetError(
            f"enumerating {total} supports exceeds the budget of {budget}"
        )

    meas = problem.measurement
    eps = meas.noise_radius
    feas_cut = eps + _ORACLE_FEAS_SLACK
    examined = 0
    best_x = None
    best_rn = float("inf")
    for k in range(s + 1):
        level_x = None
        level_rn = float("inf")
        for support in itertools.combinations(range(m), k):
            x, rn = _support_fit(
                problem.system, meas.matrix, problem.observation, meas.time, icfg, support
            )
            examined += 1
            if rn < best_rn:
                best_rn = rn
                best_x = x
            if rn <= feas_cut and rn < level_rn:
                level_rn = rn
                level_x = x
        if level_x is not None:
            return RecoveryOutcome(
                estimate=level_x,
                residual=level_rn,
                weighted_l1=weighted_l1_norm(level_x, meas.weights),
                iterations=examined,
                converged=True,
            )
    return RecoveryOutcome(
        estimate=best_x,
        residual=best_rn,
        weighted_l1=weighted_l1_norm(best_x, meas.weights),
        iterations=examined,
        converged=False,
    )
