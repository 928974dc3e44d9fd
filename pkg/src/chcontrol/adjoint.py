"""Backward-in-time adjoint solver.

The adjoint is constructed as the exact algebraic transpose of the
linearized update map (discretize-then-optimize): with A_k the converged
step matrix of the forward step k-1 -> k and C_k the explicit coupling of
step k -> k+1, the multipliers solve, marching k = k_tau .. 1,

    A_k^T L_k = S_k + C_k^T L_{k+1}       (L_{k_tau + 1} = 0)

where the sources S_k carry the tracking residuals with the same
trapezoid time weights used by the cost, the terminal phase data
b2 (phi(tau) - phi_omega) + b4 / 2 at k = k_tau, and, when the relaxed
functional is active, the windowed nutrient residual weighted so the
discrete window integral is exact.

The reported trajectory (adj_mu, adj_phi, adj_sigma) rescales the
multipliers by the trapezoid node weights, which makes

    sum_k w_k <adj_sigma_k, h_k>

the exact directional derivative of the tracking cost along the
linearized solution for h (the duality identity), and makes frame k_tau
equal the terminal data (0, (b2 (phi - phi_omega) + b4/2) / beta, 0)
exactly. The treatment time is snapped to the nearest node before the
solve; the snapping error is the caller's to report.
"""

from __future__ import annotations

import numpy as np

from .errors import NanDetectedError, TimeDomainError
from .fields import Trajectory
from .objective import CostSpec, time_weights, window_weights
from .potentials import potential_split_eval, proliferation_eval
from .state import ModelParams
from .system import StepSolver

ADJOINT_NAMES = ("adj_mu", "adj_phi", "adj_sigma")


def adjoint_terminal_data(params: ModelParams, state: Trajectory, tau_index: int,
                          cost: CostSpec):
    """Terminal frame (adj_mu, adj_phi, adj_sigma) at the snapped time."""
    grid = params.grid
    phi_k = state.phi[tau_index]
    q_term = np.zeros(grid.shape)
    if cost.b2 > 0:
        diff = phi_k if cost.phi_omega is None else phi_k - cost.phi_omega
        q_term = q_term + cost.b2 * diff
    q_term = (q_term + 0.5 * cost.b4) / params.beta
    return np.zeros(grid.shape), q_term, np.zeros(grid.shape)


def solve_adjoint(params: ModelParams, state: Trajectory, tau_index: int,
                  cost: CostSpec) -> Trajectory:
    """Solve the adjoint system on nodes 0..tau_index."""
    grid, tg, pot = params.grid, params.time_grid, params.potential
    nt, dt = tg.steps, tg.dt
    if not 0 <= tau_index <= nt:
        raise TimeDomainError(f"tau index {tau_index} outside 0..{nt}")
    if state.nframes != nt + 1:
        raise TimeDomainError("adjoint needs the full forward trajectory")
    k_tau = int(tau_index)

    data = np.zeros((k_tau + 1, 3) + grid.shape)
    p_term, q_term, r_term = adjoint_terminal_data(params, state, k_tau, cost)
    data[k_tau, 0], data[k_tau, 1], data[k_tau, 2] = p_term, q_term, r_term
    if k_tau == 0:
        return Trajectory(grid, tg, data, ADJOINT_NAMES)

    solver = StepSolver(grid, dt, params.alpha, params.beta)
    a, b, c = solver.a, solver.b, solver.c
    mu, phi, sigma = state.mu, state.phi, state.sigma

    wq = time_weights(k_tau + 1, dt)
    relax = cost.relaxation
    win = None
    if relax is not None and relax.gamma > 0:
        win = relax.gamma / relax.eps * window_weights(k_tau, dt, relax.eps)

    lm = np.zeros(grid.shape)
    lf = np.zeros(grid.shape)
    ls = np.zeros(grid.shape)
    riesz = time_weights(k_tau + 1, dt)[: k_tau]  # node weights 0..k_tau-1

    for k in range(k_tau, 0, -1):
        rhs_m = np.zeros(grid.shape)
        rhs_f = np.zeros(grid.shape)
        rhs_s = np.zeros(grid.shape)
        if k < k_tau:
            # transpose of the explicit coupling of step k -> k+1
            w = proliferation_eval(params.proliferation, phi[k], 1) * (
                sigma[k + 1] - mu[k + 1])
            pi_prime = potential_split_eval(pot, phi[k], "smooth", 2)
            rhs_m = a * lm
            rhs_f = c * lm + w * lm + (b - pi_prime) * lf - w * ls
            rhs_s = c * ls
        if cost.b1 > 0:
            diff = phi[k] if cost.phi_q is None else phi[k] - cost.phi_q[k]
            rhs_f = rhs_f + cost.b1 * wq[k] * diff
        if k == k_tau:
            if cost.b2 > 0:
                diff = phi[k] if cost.phi_omega is None else phi[k] - cost.phi_omega
                rhs_f = rhs_f + cost.b2 * diff
            if cost.b4 > 0:
                rhs_f = rhs_f + 0.5 * cost.b4
        if cost.b3 > 0:
            diff = sigma[k] if cost.sigma_q is None else sigma[k] - cost.sigma_q[k]
            rhs_s = rhs_s + cost.b3 * wq[k] * diff
        if win is not None:
            rhs_s = rhs_s + win[k] * (sigma[k] - relax.sigma_omega)

        p_frozen = proliferation_eval(params.proliferation, phi[k - 1], 0)
        bpp = potential_split_eval(pot, phi[k], "convex", 2)
        lm, lf, ls = solver.solve(p_frozen, bpp, (rhs_m, rhs_f, rhs_s), transpose=True)
        if not (np.all(np.isfinite(lm)) and np.all(np.isfinite(lf)) and np.all(np.isfinite(ls))):
            raise NanDetectedError(f"adjoint frame {k - 1}")
        data[k - 1, 0] = lm / riesz[k - 1]
        data[k - 1, 1] = lf / riesz[k - 1]
        data[k - 1, 2] = ls / riesz[k - 1]

    return Trajectory(grid, tg, data, ADJOINT_NAMES)
