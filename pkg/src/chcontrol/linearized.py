"""Sensitivities of the state with respect to the control.

Given a solved base trajectory and a perturbation direction h of the
control, this module solves for the directional derivative
(d_mu, d_phi, d_sigma) of (mu, phi, sigma). The scheme is not an
independent discretization of the continuous sensitivity equations: it is
the exact derivative of the discrete forward update map, obtained by
differentiating each implicit step. Concretely, step k -> k+1 solves

    A(phi_{k+1}) y_{k+1} = C_k y_k + (0, 0, h_k)

where A is the converged Newton matrix of the forward step (with
B''(phi_{k+1}) implicit) and C_k collects the explicit couplings: the
old-frame time terms, the derivative of the frozen exchange rate
P'(phi_k)(sigma_{k+1} - mu_{k+1}) and the explicit smooth potential part
S''(phi_k). Exactness of this construction is what makes the
finite-difference consistency check clean at fixed resolution and the
adjoint an exact transpose.
"""

from __future__ import annotations

import numpy as np

from .errors import NanDetectedError, ShapeMismatchError
from .fields import Trajectory
from .potentials import potential_split_eval, proliferation_eval
from .state import ControlField, ModelParams
from .system import StepSolver

LINEARIZED_NAMES = ("d_mu", "d_phi", "d_sigma")


def solve_linearized(params: ModelParams, state: Trajectory, h) -> Trajectory:
    """Solve the linearized system along direction h with zero initial data.

    ``h`` is a ControlField or a bare (nt+1, *grid.shape) array; node k
    perturbs the control on [t_k, t_{k+1}).
    """
    grid, tg, pot = params.grid, params.time_grid, params.potential
    nt, dt = tg.steps, tg.dt
    hv = h.values if isinstance(h, ControlField) else np.asarray(h)
    if hv.shape != (nt + 1,) + grid.shape:
        raise ShapeMismatchError(
            f"perturbation shape {hv.shape}, expected {(nt + 1,) + grid.shape}"
        )
    if state.nframes != nt + 1 or state.grid.shape != grid.shape:
        raise ShapeMismatchError("state trajectory does not match the model grids")

    solver = StepSolver(grid, dt, params.alpha, params.beta)
    a, b, c = solver.a, solver.b, solver.c
    mu, phi, sigma = state.mu, state.phi, state.sigma

    data = np.zeros((nt + 1, 3) + grid.shape)
    for k in range(nt):
        e0, t0, r0 = data[k]
        f_old, f_new = phi[k], phi[k + 1]
        p_frozen = proliferation_eval(params.proliferation, f_old, 0)
        w = proliferation_eval(params.proliferation, f_old, 1) * (sigma[k + 1] - mu[k + 1])
        pi_prime = potential_split_eval(pot, f_old, "smooth", 2)
        bpp = potential_split_eval(pot, f_new, "convex", 2)

        rhs1 = a * e0 + c * t0 + w * t0
        rhs2 = b * t0 - pi_prime * t0
        rhs3 = c * r0 - w * t0 + hv[k]
        e1, t1, r1 = solver.solve(p_frozen, bpp, (rhs1, rhs2, rhs3))
        if not (np.all(np.isfinite(e1)) and np.all(np.isfinite(t1)) and np.all(np.isfinite(r1))):
            raise NanDetectedError(f"linearized frame {k + 1}")
        data[k + 1, 0], data[k + 1, 1], data[k + 1, 2] = e1, t1, r1

    return Trajectory(grid, tg, data, LINEARIZED_NAMES)
