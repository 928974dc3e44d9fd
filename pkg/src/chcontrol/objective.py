"""Treatment cost functional, its time derivative and the reduced gradient.

The cost of a state trajectory (mu, phi, sigma), control u and treatment
time tau in [0, T] is

    J = b1/2 int_0^tau |phi - phi_q|^2 + b2/2 int |phi(tau) - phi_omega|^2
      + b3/2 int_0^tau |sigma - sigma_q|^2 + b4/2 int (1 + phi(tau))
      + b5 tau + b6/2 (tau - tau_star)^2 + b0/2 int_0^T |u|^2

with an optional relaxed terminal-nutrient term
gamma/(2 eps) int_{tau-eps}^{tau} |sigma - sigma_omega|^2, where sigma is
frozen at its initial value for negative times so the window always has
length eps.

Discretization conventions, chosen so that the analytic formulas below
are exact derivatives of the discrete quantities:

* running integrals use the trapezoid rule on node values with an exact
  partial last interval, i.e. they integrate the piecewise-linear
  interpolant of the node integrand;
* fields at off-node times are interpolated linearly, and d_t phi(tau)
  is the backward difference on the interval containing tau (the slope
  of the interpolant there);
* the control energy uses trapezoid weights over the full horizon, and
  the same weighted inner product defines the Riesz representative
  returned by :func:`control_gradient` (zero-extended nutrient adjoint
  plus b0 u).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GridMismatchError, TimeDomainError
from .fields import Grid, TimeGrid, Trajectory, inner, integrate, interpolate_in_time
from .state import ControlField


class ForwardDifferenceWarning(UserWarning):
    """time_derivative at tau = 0 fell back to a forward difference."""


@dataclass(frozen=True)
class Relaxation:
    gamma: float
    eps: float
    sigma_omega: np.ndarray

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigError("cost.relaxation.gamma: must be nonnegative")
        if self.eps <= 0:
            raise ConfigError("cost.relaxation.eps: must be positive")


@dataclass
class CostSpec:
    """Weights, targets and the target time of the treatment objective."""

    b0: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    b3: float = 0.0
    b4: float = 0.0
    b5: float = 0.0
    b6: float = 0.0
    phi_q: np.ndarray | None = None        # (nt+1, *grid.shape)
    sigma_q: np.ndarray | None = None      # (nt+1, *grid.shape)
    phi_omega: np.ndarray | None = None    # grid-shaped
    tau_star: float = 0.0
    relaxation: Relaxation | None = None

    def weights(self):
        return (self.b0, self.b1, self.b2, self.b3, self.b4, self.b5, self.b6)

    def validate(self, grid: Grid, time_grid: TimeGrid) -> None:
        ws = self.weights()
        if any(w < 0 for w in ws):
            raise ConfigError("cost: weights b0..b6 must be nonnegative")
        if all(w == 0 for w in ws) and self.relaxation is None:
            raise ConfigError("cost: weights b0..b6 must not all be zero")
        if not 0.0 <= self.tau_star <= time_grid.horizon:
            raise ConfigError(f"cost.tau_star: {self.tau_star} outside "
                              f"[0, {time_grid.horizon}]")
        shape_t = (time_grid.steps + 1,) + grid.shape
        for name, arr, expected in (
            ("phi_q", self.phi_q, shape_t),
            ("sigma_q", self.sigma_q, shape_t),
            ("phi_omega", self.phi_omega, grid.shape),
        ):
            if arr is not None and arr.shape != expected:
                raise GridMismatchError(f"cost.{name}: shape {arr.shape}, "
                                        f"expected {expected}")
        if self.relaxation is not None and self.relaxation.sigma_omega.shape != grid.shape:
            raise GridMismatchError("cost.relaxation.sigma_omega: wrong shape")


def constant_trajectory(grid: Grid, time_grid: TimeGrid, value: float) -> np.ndarray:
    return np.full((time_grid.steps + 1,) + grid.shape, float(value))


@dataclass
class CostBreakdown:
    tracking_q: float = 0.0
    tracking_omega: float = 0.0
    nutrient_q: float = 0.0
    tumour_mass: float = 0.0
    linear_time: float = 0.0
    quadratic_time: float = 0.0
    control_energy: float = 0.0
    relaxed_term: float = 0.0

    @property
    def total(self) -> float:
        return (self.tracking_q + self.tracking_omega + self.nutrient_q
                + self.tumour_mass + self.linear_time + self.quadratic_time
                + self.control_energy + self.relaxed_term)

    def terms(self) -> dict:
        return {
            "tracking_q": self.tracking_q,
            "tracking_omega": self.tracking_omega,
            "nutrient_q": self.nutrient_q,
            "tumour_mass": self.tumour_mass,
            "linear_time": self.linear_time,
            "quadratic_time": self.quadratic_time,
            "control_energy": self.control_energy,
            "relaxed_term": self.relaxed_term,
        }


# ---------------------------------------------------------------------------
# Time quadrature helpers
# ---------------------------------------------------------------------------


def time_weights(n_nodes: int, dt: float) -> np.ndarray:
    """Trapezoid weights for nodes 0..n_nodes-1 (dt/2 at both ends)."""
    w = np.full(n_nodes, dt)
    if n_nodes == 1:
        return np.zeros(1)
    w[0] = w[-1] = 0.5 * dt
    return w


def quad_upto(g: np.ndarray, tau: float, dt: float) -> float:
    """Integral over [0, tau] of the piecewise-linear interpolant of the
    node values g (trapezoid on full intervals, exact partial interval)."""
    if tau < 0:
        raise TimeDomainError(f"negative integration endpoint {tau}")
    j = min(int(tau / dt), len(g) - 1)
    s = tau / dt - j
    total = 0.0
    if j > 0:
        total += dt * (0.5 * g[0] + g[1:j].sum() + 0.5 * g[j])
    if s > 0 and j + 1 < len(g):
        total += dt * s * ((1.0 - 0.5 * s) * g[j] + 0.5 * s * g[j + 1])
    return float(total)


def lerp_nodes(g: np.ndarray, tau: float, dt: float) -> float:
    """Piecewise-linear interpolation of scalar node values at time tau."""
    j = min(int(tau / dt), len(g) - 2)
    j = max(j, 0)
    s = tau / dt - j
    return float((1.0 - s) * g[j] + s * g[j + 1])


def window_weights(k_tau: int, dt: float, eps: float) -> np.ndarray:
    """Per-node quadrature weights of the window (tau - eps, tau] snapped
    at tau = t_{k_tau}; the weights sum to min(eps, tau) exactly (partial
    first cell weighted)."""
    w = np.zeros(k_tau + 1)
    t_hi = k_tau * dt
    a = max(0.0, t_hi - eps)
    if k_tau == 0 or a >= t_hi:
        return w
    j = min(int(a / dt), k_tau - 1)
    xi = a / dt - j
    w[j] += dt * (1.0 - xi) ** 2 / 2.0
    w[j + 1] += dt * (1.0 - xi**2) / 2.0
    for i in range(j + 1, k_tau):
        w[i] += 0.5 * dt
        w[i + 1] += 0.5 * dt
    return w


# ---------------------------------------------------------------------------
# Space-time inner products over node-indexed arrays
# ---------------------------------------------------------------------------


def space_time_inner(grid: Grid, dt: float, a: np.ndarray, b: np.ndarray,
                     weights: np.ndarray | None = None) -> float:
    """Trapezoid-weighted L2(Q) pairing of node-indexed field arrays."""
    if a.shape != b.shape:
        raise GridMismatchError(f"space-time shapes differ: {a.shape} vs {b.shape}")
    if weights is None:
        weights = time_weights(a.shape[0], dt)
    axes = tuple(range(1, a.ndim))
    node_inner = (a * b).sum(axis=axes) * grid.cell_volume
    return float(np.dot(weights, node_inner))


def space_time_norm(grid: Grid, dt: float, a: np.ndarray,
                    weights: np.ndarray | None = None) -> float:
    return float(np.sqrt(max(space_time_inner(grid, dt, a, a, weights), 0.0)))


def _node_sq_norms(grid: Grid, a: np.ndarray) -> np.ndarray:
    axes = tuple(range(1, a.ndim))
    return (a * a).sum(axis=axes) * grid.cell_volume


# ---------------------------------------------------------------------------
# Cost evaluation
# ---------------------------------------------------------------------------


def _tracking_sq(grid, traj_comp, target):
    diff = traj_comp if target is None else traj_comp - target
    return _node_sq_norms(grid, diff)


def _relaxed_value(state, tau, cost):
    relax = cost.relaxation
    if relax is None or relax.gamma == 0.0:
        return 0.0
    grid, dt = state.grid, state.time_grid.dt
    g = _node_sq_norms(grid, state.sigma - relax.sigma_omega)
    lo = tau - relax.eps
    value = quad_upto(g, tau, dt) - quad_upto(g, max(lo, 0.0), dt)
    if lo < 0:
        value += (-lo) * g[0]  # sigma frozen at sigma(0) for negative times
    return relax.gamma / (2.0 * relax.eps) * value


def _check_cost_shapes(state, u, cost):
    shape_t = state.data.shape[:1] + state.grid.shape
    for name, arr, expected in (
        ("phi_q", cost.phi_q, shape_t),
        ("sigma_q", cost.sigma_q, shape_t),
        ("phi_omega", cost.phi_omega, state.grid.shape),
        ("control", u.values, shape_t),
    ):
        if arr is not None and arr.shape != expected:
            raise GridMismatchError(f"cost evaluation: {name} has shape "
                                    f"{arr.shape}, expected {expected}")


def evaluate_cost(state: Trajectory, u: ControlField, tau: float,
                  cost: CostSpec) -> CostBreakdown:
    """Cost of (state, u, tau); the relaxed window term is left at zero."""
    grid, tg = state.grid, state.time_grid
    _check_cost_shapes(state, u, cost)
    tau = tg.clamp(tau)
    dt = tg.dt
    out = CostBreakdown()

    if cost.b1 > 0:
        out.tracking_q = 0.5 * cost.b1 * quad_upto(
            _tracking_sq(grid, state.phi, cost.phi_q), tau, dt)
    if cost.b3 > 0:
        out.nutrient_q = 0.5 * cost.b3 * quad_upto(
            _tracking_sq(grid, state.sigma, cost.sigma_q), tau, dt)
    if cost.b2 > 0 or cost.b4 > 0:
        phi_tau = interpolate_in_time(state, "phi", tau)
        if cost.b2 > 0:
            diff = phi_tau if cost.phi_omega is None else phi_tau - cost.phi_omega
            out.tracking_omega = 0.5 * cost.b2 * inner(grid, diff, diff)
        if cost.b4 > 0:
            out.tumour_mass = 0.5 * cost.b4 * integrate(grid, 1.0 + phi_tau)
    out.linear_time = cost.b5 * tau
    out.quadratic_time = 0.5 * cost.b6 * (tau - cost.tau_star) ** 2
    if cost.b0 > 0:
        out.control_energy = 0.5 * cost.b0 * space_time_inner(
            grid, dt, u.values, u.values)
    return out


def evaluate_cost_relaxed(state: Trajectory, u: ControlField, tau: float,
                          cost: CostSpec) -> CostBreakdown:
    """Cost including the windowed terminal-nutrient term."""
    if cost.relaxation is None:
        raise ConfigError("cost.relaxation: required by the relaxed functional")
    out = evaluate_cost(state, u, tau, cost)
    out.relaxed_term = _relaxed_value(state, state.time_grid.clamp(tau), cost)
    return out


def reduced_cost(state: Trajectory, u: ControlField, tau: float,
                 cost: CostSpec) -> CostBreakdown:
    """The functional the optimizer minimizes: relaxed when configured."""
    if cost.relaxation is not None:
        return evaluate_cost_relaxed(state, u, tau, cost)
    return evaluate_cost(state, u, tau, cost)


# ---------------------------------------------------------------------------
# Time derivative and the reduced gradient
# ---------------------------------------------------------------------------


def _dphi_dt(state: Trajectory, tau: float, flag_degenerate: bool):
    """Backward difference of phi on the interval containing tau."""
    tg = state.time_grid
    j_hi = int(np.searchsorted(tg.times, tau, side="left"))
    if j_hi == 0:
        if flag_degenerate:
            warnings.warn(
                "time derivative at tau = 0 uses a forward difference",
                ForwardDifferenceWarning,
            )
        j_hi = 1
    j_hi = min(j_hi, tg.steps)
    return (state.phi[j_hi] - state.phi[j_hi - 1]) / tg.dt


def time_derivative(state: Trajectory, tau: float, cost: CostSpec) -> float:
    """Analytic derivative of the reduced cost with respect to tau.

    Exact derivative of the discrete cost away from time nodes; at nodes
    the backward-difference convention picks the left slope of the
    d_t phi terms.
    """
    grid, tg = state.grid, state.time_grid
    tau = tg.clamp(tau)
    dt = tg.dt
    value = cost.b5 + cost.b6 * (tau - cost.tau_star)

    if cost.b1 > 0:
        value += 0.5 * cost.b1 * lerp_nodes(
            _tracking_sq(grid, state.phi, cost.phi_q), tau, dt)
    if cost.b3 > 0:
        value += 0.5 * cost.b3 * lerp_nodes(
            _tracking_sq(grid, state.sigma, cost.sigma_q), tau, dt)
    if cost.b2 > 0 or cost.b4 > 0:
        dphi = _dphi_dt(state, tau, flag_degenerate=(tau == 0.0))
        if cost.b2 > 0:
            phi_tau = interpolate_in_time(state, "phi", tau)
            diff = phi_tau if cost.phi_omega is None else phi_tau - cost.phi_omega
            value += cost.b2 * inner(grid, diff, dphi)
        if cost.b4 > 0:
            value += 0.5 * cost.b4 * integrate(grid, dphi)
    relax = cost.relaxation
    if relax is not None and relax.gamma > 0:
        g = _node_sq_norms(grid, state.sigma - relax.sigma_omega)
        at_tau = lerp_nodes(g, tau, dt)
        lo = tau - relax.eps
        at_lo = g[0] if lo <= 0 else lerp_nodes(g, lo, dt)
        value += relax.gamma / (2.0 * relax.eps) * (at_tau - at_lo)
    return float(value)


def lambda_term(state: Trajectory, tau: float, cost: CostSpec) -> float:
    """Time derivative minus its b6 (tau - tau_star) part."""
    tau = state.time_grid.clamp(tau)
    return time_derivative(state, tau, cost) - cost.b6 * (tau - cost.tau_star)


class TauProfile:
    """Scalar view of tau -> J(u, tau) at a fixed state and control.

    Caches the node quantities once (O(steps * cells)) so that value and
    derivative evaluations cost O(1); the optimizer leans on this for its
    treatment-time searches. Between nodes the derivative of the discrete
    cost is piecewise linear in tau, so the continuous minimizer can be
    located to roundoff with a short bisection.
    """

    def __init__(self, state: Trajectory, u: ControlField, cost: CostSpec):
        grid, tg = state.grid, state.time_grid
        self.tg = tg
        self.dt = tg.dt
        self.cost = cost
        self.times = tg.times
        vol = grid.cell_volume

        self.g1 = self.g3 = self.g_relax = None
        if cost.b1 > 0:
            self.g1 = _tracking_sq(grid, state.phi, cost.phi_q)
            self.cum1 = self._cumtrapz(self.g1)
        if cost.b3 > 0:
            self.g3 = _tracking_sq(grid, state.sigma, cost.sigma_q)
            self.cum3 = self._cumtrapz(self.g3)
        relax = cost.relaxation
        if relax is not None and relax.gamma > 0:
            self.g_relax = _node_sq_norms(grid, state.sigma - relax.sigma_omega)
            self.cum_relax = self._cumtrapz(self.g_relax)

        if cost.b2 > 0 or cost.b4 > 0:
            diff = state.phi if cost.phi_omega is None else state.phi - cost.phi_omega
            axes = tuple(range(1, diff.ndim))
            if cost.b2 > 0:
                self.qn = (diff * diff).sum(axis=axes) * vol
                self.qx = (diff[:-1] * diff[1:]).sum(axis=axes) * vol
                dphi = np.diff(state.phi, axis=0) / self.dt
                self.p_prev = (diff[:-1] * dphi).sum(axis=axes) * vol
                self.p_cur = (diff[1:] * dphi).sum(axis=axes) * vol
            if cost.b4 > 0:
                self.mass = (1.0 + state.phi).sum(axis=axes) * vol
        self.const = 0.0
        if cost.b0 > 0:
            self.const = 0.5 * cost.b0 * space_time_inner(grid, self.dt,
                                                          u.values, u.values)

    def _cumtrapz(self, g):
        out = np.zeros(len(g))
        out[1:] = np.cumsum(0.5 * self.dt * (g[:-1] + g[1:]))
        return out

    def _quad(self, g, cum, tau):
        j = min(int(tau / self.dt), len(g) - 1)
        s = tau / self.dt - j
        total = cum[j]
        if s > 0 and j + 1 < len(g):
            total += self.dt * s * ((1.0 - 0.5 * s) * g[j] + 0.5 * s * g[j + 1])
        return total

    def _bracket(self, tau):
        """Interval index for the backward-difference convention."""
        j_hi = int(np.searchsorted(self.times, tau, side="left"))
        j_hi = min(max(j_hi, 1), self.tg.steps)
        return j_hi, (tau - self.times[j_hi - 1]) / self.dt

    def value(self, tau: float) -> float:
        c = self.cost
        out = self.const + c.b5 * tau + 0.5 * c.b6 * (tau - c.tau_star) ** 2
        if self.g1 is not None:
            out += 0.5 * c.b1 * self._quad(self.g1, self.cum1, tau)
        if self.g3 is not None:
            out += 0.5 * c.b3 * self._quad(self.g3, self.cum3, tau)
        if c.b2 > 0:
            j = min(int(tau / self.dt), len(self.qn) - 2)
            s = tau / self.dt - j
            out += 0.5 * c.b2 * ((1 - s) ** 2 * self.qn[j]
                                 + 2 * s * (1 - s) * self.qx[j]
                                 + s**2 * self.qn[j + 1])
        if c.b4 > 0:
            out += 0.5 * c.b4 * lerp_nodes(self.mass, tau, self.dt)
        if self.g_relax is not None:
            relax = c.relaxation
            lo = tau - relax.eps
            win = self._quad(self.g_relax, self.cum_relax, tau) \
                - self._quad(self.g_relax, self.cum_relax, max(lo, 0.0))
            if lo < 0:
                win += (-lo) * self.g_relax[0]
            out += relax.gamma / (2.0 * relax.eps) * win
        return float(out)

    def derivative(self, tau: float) -> float:
        c = self.cost
        out = c.b5 + c.b6 * (tau - c.tau_star)
        if self.g1 is not None:
            out += 0.5 * c.b1 * lerp_nodes(self.g1, tau, self.dt)
        if self.g3 is not None:
            out += 0.5 * c.b3 * lerp_nodes(self.g3, tau, self.dt)
        if c.b2 > 0 or c.b4 > 0:
            j_hi, s = self._bracket(tau)
            if c.b2 > 0:
                out += c.b2 * ((1 - s) * self.p_prev[j_hi - 1] + s * self.p_cur[j_hi - 1])
            if c.b4 > 0:
                out += 0.5 * c.b4 * (self.mass[j_hi] - self.mass[j_hi - 1]) / self.dt
        if self.g_relax is not None:
            relax = c.relaxation
            lo = tau - relax.eps
            at_lo = self.g_relax[0] if lo <= 0 else lerp_nodes(self.g_relax, lo, self.dt)
            out += relax.gamma / (2.0 * relax.eps) * (
                lerp_nodes(self.g_relax, tau, self.dt) - at_lo)
        return float(out)

    def node_values(self) -> np.ndarray:
        return np.array([self.value(t) for t in self.times])

    def minimize(self) -> float:
        """Continuous minimizer of J(u, .) over [0, T] near the best node."""
        node_j = self.node_values()
        k = int(np.argmin(node_j))
        horizon = self.tg.horizon
        lo = max(self.times[k] - self.dt, 0.0)
        hi = min(self.times[k] + self.dt, horizon)
        d_lo, d_hi = self.derivative(lo), self.derivative(hi)
        if d_lo >= 0.0:
            tau = lo
        elif d_hi <= 0.0:
            tau = hi
        else:
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if self.derivative(mid) > 0.0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= 1e-15 * horizon:
                    break
            tau = 0.5 * (lo + hi)
        candidates = [tau, self.times[k], max(self.times[k] - self.dt, 0.0),
                      min(self.times[k] + self.dt, horizon)]
        return min(candidates, key=self.value)


def control_gradient(adjoint: Trajectory, u: ControlField, b0: float) -> np.ndarray:
    """Riesz representative of the reduced gradient in the
    trapezoid-weighted L2(Q) product: zero-extended nutrient adjoint plus
    b0 times the control."""
    nt = u.values.shape[0] - 1
    grad = b0 * u.values.copy()
    k_tau = adjoint.nframes - 1
    if k_tau > nt:
        raise GridMismatchError("adjoint trajectory longer than the control")
    grad[: k_tau + 1] += adjoint.component("adj_sigma")
    return grad
