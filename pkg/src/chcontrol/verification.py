"""Independent oracles for the optimality formulas.

Each check re-derives a quantity along a route independent of the one it
validates and reports the observed mismatch:

* gradient check: adjoint-based reduced gradient against central finite
  differences of the reduced cost through fresh forward solves;
* duality check: the weighted pairing of the nutrient adjoint with a
  perturbation against the tracking terms evaluated on the linearized
  solution for the same perturbation;
* Lipschitz check: stability of the control-to-state map under random
  control pair perturbations across magnitudes;
* mass balance: the exactly conserved combination
  integral(alpha mu + phi + sigma) minus the injected control mass.

Directions are drawn from seeded standard normals per cell and node and
normalized in L2(Q), so rerunning a check with the same seed reproduces
its report bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adjoint import solve_adjoint
from .fields import Trajectory, integrate, norm2
from .linearized import solve_linearized
from .objective import (
    CostSpec,
    control_gradient,
    reduced_cost,
    space_time_inner,
    space_time_norm,
    time_weights,
    window_weights,
)
from .state import ControlField, InitialData, ModelParams, solve_state

DEFAULT_SEED = 20240808


def _random_direction(rng, shape, grid, dt):
    h = rng.standard_normal(shape)
    nrm = space_time_norm(grid, dt, h)
    return h / nrm


def _fit_slope(xs, ys):
    if len(xs) < 2:
        return float("nan")
    xs = np.log(np.asarray(xs))
    ys = np.log(np.maximum(np.asarray(ys), 1e-18))
    return float(np.polyfit(xs, ys, 1)[0])


@dataclass
class GradientCheckReport:
    tau: float
    tau_index: int
    deltas: list
    analytic: list                 # per direction
    rel_errors: list               # per direction, per delta
    slopes: list                   # per direction
    slope_deltas: list
    seed: int

    def max_rel_error(self, delta: float) -> float:
        j = self.deltas.index(delta)
        return max(errs[j] for errs in self.rel_errors)

    def passed(self, delta: float, tol: float, slope_range=(1.7, 2.3)) -> bool:
        if self.max_rel_error(delta) > tol:
            return False
        return all(slope_range[0] <= s <= slope_range[1]
                   for s in self.slopes if not np.isnan(s))

    def to_text(self) -> str:
        lines = [
            "gradient check: adjoint gradient vs central finite differences",
            f"tau = {self.tau:.6g} (node {self.tau_index}), seed = {self.seed}",
            "direction  analytic        " + "  ".join(f"err@{d:g}" for d in self.deltas)
            + "  slope",
        ]
        for i, errs in enumerate(self.rel_errors):
            lines.append(
                f"{i:9d}  {self.analytic[i]: .8e}  "
                + "  ".join(f"{e:.3e}" for e in errs)
                + f"  {self.slopes[i]:.3f}"
            )
        return "\n".join(lines) + "\n"


def fd_gradient_check(params: ModelParams, init: InitialData, cost: CostSpec,
                      u: ControlField, tau: float, directions: int = 5,
                      deltas=(1e-2, 1e-3, 1e-4), slope_deltas=None,
                      seed: int = DEFAULT_SEED) -> GradientCheckReport:
    """Compare <grad J, h> with central differences of the reduced cost.

    The treatment time is snapped to its node first so both routes
    differentiate exactly the same function of the control. The log-log
    slope is fit over ``slope_deltas`` (default: all), which should stay
    above the solver floor; the small deltas serve the error tolerance.
    """
    grid, tg = params.grid, params.time_grid
    k_tau, _ = tg.nearest_node(tau)
    tau_hat = tg.times[k_tau]
    deltas = list(deltas)
    slope_deltas = deltas if slope_deltas is None else list(slope_deltas)
    slope_idx = [deltas.index(d) for d in slope_deltas]

    state = solve_state(params, init, u)
    adjoint = solve_adjoint(params, state, k_tau, cost)
    grad = control_gradient(adjoint, u, cost.b0)

    rng = np.random.default_rng(seed)
    shape = u.values.shape
    analytic, rel_errors, slopes = [], [], []
    for _ in range(directions):
        h = _random_direction(rng, shape, grid, tg.dt)
        pairing = space_time_inner(grid, tg.dt, grad, h)
        errs = []
        for delta in deltas:
            up = ControlField(u.values + delta * h, u.lower, u.upper)
            dn = ControlField(u.values - delta * h, u.lower, u.upper)
            j_up = reduced_cost(solve_state(params, init, up), up, tau_hat, cost).total
            j_dn = reduced_cost(solve_state(params, init, dn), dn, tau_hat, cost).total
            fd = (j_up - j_dn) / (2.0 * delta)
            errs.append(abs(fd - pairing) / max(abs(pairing), 1e-300))
        analytic.append(pairing)
        rel_errors.append(errs)
        slopes.append(_fit_slope([deltas[i] for i in slope_idx],
                                 [errs[i] for i in slope_idx]))
    return GradientCheckReport(tau_hat, k_tau, deltas, analytic, rel_errors,
                               slopes, slope_deltas, seed)


@dataclass
class DualityCheckReport:
    tau_index: int
    mismatches: list
    lhs: list
    rhs: list
    seed: int

    @property
    def max_mismatch(self) -> float:
        return max(self.mismatches)

    def passed(self, tol: float) -> bool:
        return self.max_mismatch <= tol

    def to_text(self) -> str:
        lines = [
            "duality check: <adj_sigma, h> vs tracking terms on the linearized solve",
            f"tau node = {self.tau_index}, seed = {self.seed}",
            "direction  lhs             rhs             rel mismatch",
        ]
        for i, (a, b, m) in enumerate(zip(self.lhs, self.rhs, self.mismatches)):
            lines.append(f"{i:9d}  {a: .8e}  {b: .8e}  {m:.3e}")
        return "\n".join(lines) + "\n"


def duality_check(params: ModelParams, state: Trajectory, k_tau: int,
                  cost: CostSpec, directions: int = 10,
                  seed: int = DEFAULT_SEED) -> DualityCheckReport:
    """Exactness of the discrete transpose: for random h, the weighted
    pairing of the nutrient adjoint with h equals the tracking terms
    evaluated on the linearized solution."""
    grid, tg = params.grid, params.time_grid
    dt = tg.dt
    adjoint = solve_adjoint(params, state, k_tau, cost)
    r = adjoint.component("adj_sigma")
    wq = time_weights(k_tau + 1, dt)
    relax = cost.relaxation
    win = None
    if relax is not None and relax.gamma > 0:
        win = relax.gamma / relax.eps * window_weights(k_tau, dt, relax.eps)

    rng = np.random.default_rng(seed)
    shape = (tg.steps + 1,) + grid.shape
    lhs_list, rhs_list, mism = [], [], []
    for _ in range(directions):
        h = _random_direction(rng, shape, grid, dt)
        lin = solve_linearized(params, state, h)
        theta = lin.component("d_phi")[: k_tau + 1]
        rho = lin.component("d_sigma")[: k_tau + 1]

        lhs = space_time_inner(grid, dt, r, h[: k_tau + 1], weights=wq)
        rhs = 0.0
        if cost.b1 > 0:
            dphi = state.phi[: k_tau + 1] - (
                0.0 if cost.phi_q is None else cost.phi_q[: k_tau + 1])
            rhs += cost.b1 * space_time_inner(grid, dt, dphi, theta, weights=wq)
        if cost.b2 > 0:
            dom = state.phi[k_tau] - (0.0 if cost.phi_omega is None else cost.phi_omega)
            rhs += cost.b2 * integrate(grid, dom * theta[k_tau])
        if cost.b3 > 0:
            dsig = state.sigma[: k_tau + 1] - (
                0.0 if cost.sigma_q is None else cost.sigma_q[: k_tau + 1])
            rhs += cost.b3 * space_time_inner(grid, dt, dsig, rho, weights=wq)
        if cost.b4 > 0:
            rhs += 0.5 * cost.b4 * integrate(grid, theta[k_tau])
        if win is not None:
            rhs += space_time_inner(grid, dt, state.sigma[: k_tau + 1]
                                    - relax.sigma_omega, rho, weights=win)
        scale = max(abs(lhs), abs(rhs), 1e-14)
        lhs_list.append(lhs)
        rhs_list.append(rhs)
        mism.append(abs(lhs - rhs) / scale)
    return DualityCheckReport(k_tau, mism, lhs_list, rhs_list, seed)


@dataclass
class LipschitzCheckReport:
    magnitudes: list
    ratios: dict                    # field name -> (pairs, magnitudes) array
    seed: int

    def spread_across_magnitudes(self, name: str = "combined") -> float:
        table = self.ratios[name]
        per_pair = table.max(axis=1) / np.maximum(table.min(axis=1), 1e-300)
        return float(per_pair.max())

    def spread_across_pairs(self, name: str = "combined") -> float:
        table = self.ratios[name]
        return float(table.max() / max(table.min(), 1e-300))

    def passed(self, pair_spread_tol: float = 10.0,
               magnitude_spread_tol: float = 3.0) -> bool:
        """Bounded constant across pairs and no divergence as the
        perturbation magnitude shrinks."""
        return (self.spread_across_pairs() <= pair_spread_tol
                and self.spread_across_magnitudes() <= magnitude_spread_tol)

    def to_text(self) -> str:
        lines = ["lipschitz check: state differences / control difference",
                 f"magnitudes = {self.magnitudes}, seed = {self.seed}"]
        for name, table in self.ratios.items():
            lines.append(f"[{name}]")
            for i, row in enumerate(table):
                lines.append(f"  pair {i}: " + "  ".join(f"{v:.6e}" for v in row))
        lines.append(f"spread across pairs (combined): "
                     f"{self.spread_across_pairs():.3f}")
        lines.append(f"max spread across magnitudes (combined): "
                     f"{self.spread_across_magnitudes():.3f}")
        return "\n".join(lines) + "\n"


def lipschitz_check(params: ModelParams, init: InitialData,
                    base: ControlField, pairs: int = 5,
                    magnitudes=(1e-1, 1e-2, 1e-3),
                    seed: int = DEFAULT_SEED) -> LipschitzCheckReport:
    """Ratio of state differences to control differences for random
    control pairs at several perturbation magnitudes."""
    grid, tg = params.grid, params.time_grid
    dt = tg.dt
    magnitudes = list(magnitudes)
    rng = np.random.default_rng(seed)
    shape = base.values.shape
    names = ("mu", "phi", "sigma", "combined")
    tables = {name: np.zeros((pairs, len(magnitudes))) for name in names}

    for i in range(pairs):
        xi1 = _random_direction(rng, shape, grid, dt)
        xi2 = _random_direction(rng, shape, grid, dt)
        for j, mag in enumerate(magnitudes):
            u1 = ControlField(base.values + mag * xi1, base.lower, base.upper)
            u2 = ControlField(base.values + mag * xi2, base.lower, base.upper)
            s1 = solve_state(params, init, u1)
            s2 = solve_state(params, init, u2)
            du = space_time_norm(grid, dt, u1.values - u2.values)
            sup = {name: 0.0 for name in names}
            for k in range(tg.steps + 1):
                dm = s1.mu[k] - s2.mu[k]
                df = s1.phi[k] - s2.phi[k]
                ds = s1.sigma[k] - s2.sigma[k]
                sup["mu"] = max(sup["mu"], norm2(grid, dm))
                sup["phi"] = max(sup["phi"], norm2(grid, df))
                sup["sigma"] = max(sup["sigma"], norm2(grid, ds))
                sup["combined"] = max(sup["combined"],
                                      norm2(grid, params.alpha * dm + df + ds))
            for name in names:
                tables[name][i, j] = sup[name] / du if du > 0 else 0.0
    return LipschitzCheckReport(magnitudes, tables, seed)


@dataclass
class MassBalanceReport:
    residual: float

    def passed(self, tol: float = 1e-10) -> bool:
        return self.residual <= tol

    def to_text(self) -> str:
        return (f"mass balance check: max relative drift of "
                f"integral(alpha mu + phi + sigma) = {self.residual:.6e}\n")


def mass_balance_check(traj: Trajectory, u: ControlField,
                       params: ModelParams) -> MassBalanceReport:
    """Max over steps of the drift of the conserved combination, relative
    to its initial size."""
    grid, tg = params.grid, params.time_grid
    dt = tg.dt
    mass0 = integrate(grid, params.alpha * traj.mu[0] + traj.phi[0] + traj.sigma[0])
    scale = 1.0 + abs(mass0)
    injected = 0.0
    worst = 0.0
    for k in range(1, tg.steps + 1):
        injected += dt * integrate(grid, u.values[k - 1])
        mass_k = integrate(grid, params.alpha * traj.mu[k] + traj.phi[k]
                           + traj.sigma[k])
        worst = max(worst, abs(mass_k - mass0 - injected) / scale)
    return MassBalanceReport(worst)
