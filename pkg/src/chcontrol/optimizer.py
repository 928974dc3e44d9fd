"""Projected-gradient minimization over (control, treatment time).

Block-coordinate loop. Each outer iteration first minimizes the cost over
the treatment time at the current state (cheap and essentially exact: the
discrete cost's time derivative is piecewise linear in tau, so the
continuous minimizer is found by a node scan plus bisection), snaps that
time to its nearest node, solves the adjoint there, and takes a projected
Armijo step in the control along the reduced gradient. Keeping the
control block aligned with the snapped node makes its descent direction
the exact gradient of the objective it descends, so the projection form
of the first-order condition converges to tight tolerances; the reported
treatment time is the continuous minimizer, where the analytic time
derivative satisfies its own first-order condition.

Trial step sizes for the control use a spectral (Barzilai-Borwein)
estimate from the previous accepted step, safeguarded by monotone Armijo
backtracking; a fixed unit trial step cannot reach the KKT tolerances
here because the control Hessian spans scales from b0 to order one.

Stationarity measures (both relative):

* control: || u - clamp(-r/b0) ||_{L2(Q)} / (1 + ||u||) when b0 > 0, the
  projection characterization of optimality, with r the zero-extended
  nutrient adjoint at the snapped node; otherwise the unit-step projected
  gradient residual;
* time: |D_tau J| at an interior refined tau, or its sign violation at
  the endpoints.

Convergence requires both measures below ``grad_tol`` and the snapped
node stable across two consecutive iterations; the returned iterate
carries the measures verified on itself.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .adjoint import solve_adjoint
from .errors import ConfigError, LineSearchFailureError
from .fields import Trajectory
from .objective import (
    CostBreakdown,
    CostSpec,
    ForwardDifferenceWarning,
    TauProfile,
    control_gradient,
    reduced_cost,
    space_time_inner,
    space_time_norm,
    time_derivative,
)
from .state import ControlField, InitialData, ModelParams, solve_state

BOUNDARY_LOW = "boundary_low"
INTERIOR = "interior"
BOUNDARY_HIGH = "boundary_high"


@dataclass(frozen=True)
class ArmijoParams:
    c1: float = 1e-4
    backtrack: float = 0.5
    s0: float = 1.0
    max_backtracks: int = 30

    def __post_init__(self):
        if not 0 < self.c1 < 1:
            raise ConfigError("optimizer.armijo.c1: must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ConfigError("optimizer.armijo.backtrack: must lie in (0, 1)")


@dataclass(frozen=True)
class OptimizerConfig:
    max_outer_iters: int = 1000
    armijo: ArmijoParams = field(default_factory=ArmijoParams)
    grad_tol: float = 1e-5
    # retained for config compatibility; the exact scalar time search does
    # not need a step scale
    tau_step_scale: float = 1.0


@dataclass
class IterationRecord:
    iteration: int
    tau: float
    breakdown: CostBreakdown
    stat_u: float
    stat_tau: float
    time_case: str
    tau_index: int
    snap_error: float


@dataclass
class TimeOptimalityReport:
    case: str
    derivative: float
    lambda_value: float
    satisfied: bool
    tolerance: float
    fixed_point_residual: float | None = None


@dataclass
class OptResult:
    u_opt: ControlField
    tau_opt: float
    history: list
    time_case: str
    converged: bool
    iterations: int
    stat_u: float
    stat_tau: float
    state: Trajectory
    adjoint: Trajectory
    gradient: np.ndarray


def project_control(u: ControlField) -> ControlField:
    """Pointwise clamp onto the admissible box; idempotent and
    1-Lipschitz in L2(Q)."""
    return u.clipped()


def adj_sigma_extended(adjoint: Trajectory, tg) -> np.ndarray:
    """Zero extension of the nutrient adjoint to the full time grid."""
    out = np.zeros((tg.steps + 1,) + adjoint.grid.shape)
    out[: adjoint.nframes] = adjoint.component("adj_sigma")
    return out


def classify_time_optimality(state: Trajectory, u: ControlField, tau: float,
                             cost: CostSpec, tol: float) -> TimeOptimalityReport:
    """Check which first-order time condition holds at (u, tau).

    Boundary cases are declared within dt/2 of an endpoint. For b6 != 0
    and an interior tau the report carries the fixed-point residual
    |tau - (tau_star - Lambda / b6)|.
    """
    tg = state.time_grid
    tau = tg.clamp(tau)
    d = time_derivative(state, tau, cost)
    lam = d - cost.b6 * (tau - cost.tau_star)
    case = _tau_case(tg, tau)
    if case == BOUNDARY_LOW:
        ok = d >= -tol
    elif case == BOUNDARY_HIGH:
        ok = d <= tol
    else:
        ok = abs(d) <= tol
    fp = None
    if cost.b6 != 0 and case == INTERIOR:
        fp = abs(tau - (cost.tau_star - lam / cost.b6))
    return TimeOptimalityReport(case, d, lam, bool(ok), tol, fp)


def _tau_case(tg, tau):
    half_dt = 0.5 * tg.dt
    if tau <= half_dt:
        return BOUNDARY_LOW
    if tau >= tg.horizon - half_dt:
        return BOUNDARY_HIGH
    return INTERIOR


def _stat_tau(tg, tau, d, j_total):
    case = _tau_case(tg, tau)
    if case == BOUNDARY_LOW:
        viol = max(0.0, -d)
    elif case == BOUNDARY_HIGH:
        viol = max(0.0, d)
    else:
        viol = abs(d)
    return viol / (1.0 + abs(j_total)), case


class _SpectralStep:
    """Barzilai-Borwein trial step with growth fallback."""

    def __init__(self, s0):
        self.trial = s0
        self.prev_x = None
        self.prev_g = None

    def propose(self, x, g, inner_fn):
        if self.prev_x is not None:
            dx = x - self.prev_x
            dg = g - self.prev_g
            num = inner_fn(dx, dx)
            den = inner_fn(dx, dg)
            if den > 0 and num > 0:
                self.trial = num / den
            else:
                self.trial = min(self.trial * 2.0, 1e12)
        return self.trial

    def remember(self, x, g, accepted_step):
        self.prev_x = x.copy()
        self.prev_g = g.copy()
        self.trial = min(max(accepted_step, 1e-12), 1e12)


def optimize(params: ModelParams, init: InitialData, cost: CostSpec,
             config: OptimizerConfig | None = None,
             u0: ControlField | None = None, tau0: float | None = None) -> OptResult:
    """Minimize the reduced cost over the admissible controls and [0, T]."""
    config = config or OptimizerConfig()
    grid, tg = params.grid, params.time_grid
    cost.validate(grid, tg)
    if u0 is None:
        raise ConfigError("optimizer: an initial control with bounds is required")
    u = project_control(u0)
    tau0 = tg.clamp(tg.horizon / 2 if tau0 is None else tau0)
    c1 = config.armijo.c1

    def qt_inner(x, y):
        return space_time_inner(grid, tg.dt, x, y)

    def qt_norm(x):
        return space_time_norm(grid, tg.dt, x)

    state = solve_state(params, init, u)
    history: list[IterationRecord] = []
    u_stepper = _SpectralStep(config.armijo.s0)
    prev_index = None
    tau_ref = tau0
    converged = False
    adj = None
    grad = None
    bd_ref = None

    for it in range(config.max_outer_iters + 1):
        # treatment-time block: continuous minimizer at the frozen state,
        # sticky under ties so flat profiles keep the current time
        profile = TauProfile(state, u, cost)
        candidate = profile.minimize()
        if profile.value(candidate) < profile.value(tau_ref):
            tau_ref = candidate
        k_idx, snap_error = tg.nearest_node(tau_ref)
        tau_node = tg.times[k_idx]

        adj = solve_adjoint(params, state, k_idx, cost)
        grad = control_gradient(adj, u, cost.b0)
        if cost.b0 > 0:
            cand = np.clip(-adj_sigma_extended(adj, tg) / cost.b0, u.lower, u.upper)
        else:
            cand = np.clip(u.values - grad, u.lower, u.upper)
        stat_u = qt_norm(u.values - cand) / (1.0 + qt_norm(u.values))
        with warnings.catch_warnings():
            # the boundary fallback of the time derivative is expected here
            warnings.simplefilter("ignore", ForwardDifferenceWarning)
            d_ref = time_derivative(state, tau_ref, cost)
        bd_ref = reduced_cost(state, u, tau_ref, cost)
        stat_tau, case = _stat_tau(tg, tau_ref, d_ref, bd_ref.total)
        bd_node = reduced_cost(state, u, tau_node, cost)

        history.append(IterationRecord(it, tau_node, bd_node, stat_u, stat_tau,
                                       case, k_idx, snap_error))
        snap_stable = prev_index is None or k_idx == prev_index
        prev_index = k_idx
        if stat_u <= config.grad_tol and stat_tau <= config.grad_tol and snap_stable:
            converged = True
            break
        if it == config.max_outer_iters:
            break

        # control block at the snapped node
        j_node = bd_node.total
        step_norm = qt_norm(np.clip(u.values - grad, u.lower, u.upper) - u.values)
        if step_norm > 0:
            s = u_stepper.propose(u.values, grad, qt_inner)
            accepted = False
            for _ in range(config.armijo.max_backtracks):
                trial_vals = np.clip(u.values - s * grad, u.lower, u.upper)
                direction = trial_vals - u.values
                gd = qt_inner(grad, direction)
                if gd >= 0.0:
                    break
                u_trial = ControlField(trial_vals, u.lower, u.upper)
                state_trial = solve_state(params, init, u_trial)
                j_trial = reduced_cost(state_trial, u_trial, tau_node, cost).total
                if j_trial <= j_node + c1 * gd:
                    accepted = True
                    break
                s *= config.armijo.backtrack
            if accepted:
                u_stepper.remember(u.values, grad, s)
                u = u_trial
                state = state_trial
            else:
                # restart the next search from the deepest backtracked step
                u_stepper.trial = max(s, 1e-12)
                if stat_u > config.grad_tol:
                    raise LineSearchFailureError(
                        it, "control",
                        f"no Armijo decrease within {config.armijo.max_backtracks} "
                        f"backtracks at stat_u={stat_u:.3e}",
                        control=u, tau=tau_ref)

    # report the continuous minimizer when it improves on the node
    last = history[-1]
    tau_opt = last.tau
    if bd_ref is not None and bd_ref.total <= last.breakdown.total:
        tau_opt = tau_ref
        history.append(IterationRecord(last.iteration, tau_opt, bd_ref,
                                       last.stat_u, last.stat_tau,
                                       last.time_case, last.tau_index,
                                       last.snap_error))
        last = history[-1]
    return OptResult(
        u_opt=u, tau_opt=tau_opt, history=history, time_case=last.time_case,
        converged=converged, iterations=len(history), stat_u=last.stat_u,
        stat_tau=last.stat_tau, state=state, adjoint=adj, gradient=grad,
    )
