import numpy as np
import pytest

import chcontrol as ch
from chcontrol.errors import (
    ConfigError,
    NanDetectedError,
    NewtonDivergenceError,
)
from conftest import equilibrium_init, make_problem, midpoint_control


def test_params_reject_nonpositive_constants():
    g = ch.Grid.line(16)
    tg = ch.TimeGrid(1.0, 4)
    pot = ch.Potential.quartic()
    pro = ch.Proliferation.constant(1.0)
    with pytest.raises(ConfigError):
        ch.ModelParams(0.0, 0.1, pot, pro, g, tg)
    with pytest.raises(ConfigError):
        ch.ModelParams(0.1, -1.0, pot, pro, g, tg)


def test_initial_data_validation():
    g = ch.Grid.line(16)
    pot = ch.Potential.logarithmic(2.0)
    bad = ch.InitialData(g.zeros(), g.full(1.2), g.zeros())
    with pytest.raises(ConfigError):
        bad.validate(g, pot)
    nan = ch.InitialData(g.full(np.nan), g.zeros(), g.zeros())
    with pytest.raises(NanDetectedError):
        nan.validate(g, ch.Potential.quartic())


def test_homogeneous_equilibrium_is_stationary():
    params = make_problem(n=48, nt=32)
    c = 0.3
    init = equilibrium_init(params, c)
    u = ch.ControlField.constant(params.grid, params.time_grid, 0.0, -1.0, 1.0)
    traj = ch.solve_state(params, init, u)
    assert np.abs(traj.phi - c).max() <= 1e-10
    assert np.abs(traj.mu - init.mu0[0]).max() <= 1e-10


def test_frame_zero_bit_identical():
    params = make_problem(n=32, nt=8)
    init = equilibrium_init(params, 0.1)
    init.sigma0 += 0.01 * np.sin(params.grid.axis_centers(0))
    u = midpoint_control(params)
    traj = ch.solve_state(params, init, u)
    assert np.array_equal(traj.mu[0], init.mu0)
    assert np.array_equal(traj.phi[0], init.phi0)
    assert np.array_equal(traj.sigma[0], init.sigma0)


def test_mass_identity_with_random_control():
    params = make_problem(n=48, nt=48)
    init = equilibrium_init(params)
    rng = np.random.default_rng(0)
    u = ch.ControlField(
        rng.uniform(0, 2, (params.time_grid.steps + 1,) + params.grid.shape),
        0.0, 2.0)
    traj = ch.solve_state(params, init, u)
    rep = ch.mass_balance_check(traj, u, params)
    assert rep.residual <= 1e-10
    assert traj.diagnostics.mass_residual.max() <= 1e-10


def test_nutrient_decouples_to_heat_equation():
    # P == 0 and u == 0: conserved nutrient mass, non-increasing L2 norm
    g = ch.Grid.line(64)
    tg = ch.TimeGrid(0.5, 32)
    params = ch.ModelParams(0.1, 0.1, ch.Potential.quartic(),
                            ch.Proliferation.constant(0.0), g, tg)
    init = equilibrium_init(params, 0.2)
    init.sigma0 = 0.5 + 0.3 * np.cos(np.pi * g.axis_centers(0))
    u = ch.ControlField.constant(g, tg, 0.0, -1.0, 1.0)
    traj = ch.solve_state(params, init, u)
    m0 = ch.integrate(g, traj.sigma[0])
    norms = [ch.norm2(g, traj.sigma[k]) for k in range(traj.nframes)]
    for k in range(1, traj.nframes):
        assert abs(ch.integrate(g, traj.sigma[k]) - m0) <= 1e-12 * (1 + abs(m0))
        assert norms[k] <= norms[k - 1] + 1e-14


def test_first_order_self_convergence_in_dt():
    # perturbed equilibrium; halving dt halves the self-convergence error
    def solve_at(nt):
        params = make_problem(n=48, nt=nt, horizon=0.5)
        init = equilibrium_init(params, 0.2)
        init.phi0 = init.phi0 + 0.05 * np.cos(np.pi * params.grid.axis_centers(0))
        u = midpoint_control(params)
        return params, ch.solve_state(params, init, u)

    params, coarse = solve_at(32)
    _, mid = solve_at(64)
    _, fine = solve_at(128)
    g = params.grid
    e1 = ch.norm2(g, coarse.phi[-1] - mid.phi[-1])
    e2 = ch.norm2(g, mid.phi[-1] - fine.phi[-1])
    assert 1.7 <= e1 / e2 <= 2.3


def test_lipschitz_dependence_on_control():
    params = make_problem(n=48, nt=32)
    init = equilibrium_init(params)
    base = midpoint_control(params)
    rep = ch.lipschitz_check(params, init, base, pairs=5,
                             magnitudes=[1e-1, 1e-2, 1e-3])
    # constant bounded across pairs, stable as the magnitude shrinks
    assert rep.passed(10.0)
    assert rep.spread_across_magnitudes() <= 3.0


def test_separation_violation_reported():
    # a steep logarithmic well pulls phi to the clamp margin
    g = ch.Grid.line(32)
    tg = ch.TimeGrid(1.0, 16)
    params = ch.ModelParams(0.1, 0.1, ch.Potential.logarithmic(8.0),
                            ch.Proliferation.constant(0.0), g, tg)
    init = ch.InitialData(g.zeros(), g.full(0.9), g.zeros())
    u = ch.ControlField.constant(g, tg, 0.0, -1.0, 1.0)
    with pytest.raises(ch.SeparationViolationError):
        ch.solve_state(params, init, u)


def test_newton_divergence_reported():
    params = make_problem(n=32, nt=4)
    init = equilibrium_init(params, 0.2)
    init.phi0 = init.phi0 + 0.2 * np.cos(np.pi * params.grid.axis_centers(0))
    u = midpoint_control(params)
    with pytest.raises(NewtonDivergenceError):
        ch.solve_state(params, init, u, newton_max_iter=1)


def test_separation_report():
    g = ch.Grid.line(16)
    tg = ch.TimeGrid(1.0, 2)
    pot = ch.Potential.logarithmic(2.0)
    data = np.zeros((3, 3) + g.shape)
    traj = ch.Trajectory(g, tg, data, ("mu", "phi", "sigma"))
    rep = ch.separation_report(traj, pot)
    assert rep.delta_sep == 1.0
    data[1, 1] = 0.9
    rep = ch.separation_report(traj, pot)
    assert rep.delta_sep == pytest.approx(0.1)
    assert rep.argmin_frame == 1
    # unbounded domain: infinite separation
    rep_q = ch.separation_report(traj, ch.Potential.quartic())
    assert rep_q.delta_sep == np.inf


def test_tanh_front_run():
    # a sharp front between the pure phases relaxes smoothly (its width is
    # far below the equilibrium interface width at this scaling)
    from chcontrol.cli import preset_initial_data

    params = make_problem(n=64, nt=24, horizon=0.25)
    init = preset_initial_data("tanh_front", params.grid, params.potential,
                               width=0.08, position=0.5)
    assert init.phi0[0] < 0 < init.phi0[-1]
    u = ch.ControlField.constant(params.grid, params.time_grid, 0.0, 0.0, 2.0)
    traj = ch.solve_state(params, init, u)
    assert np.all(np.isfinite(traj.data))
    assert np.abs(traj.phi).max() <= 1.0
    assert traj.diagnostics.mass_residual.max() <= 1e-10


def test_logarithmic_run_stays_separated():
    from chcontrol.cli import preset_initial_data

    pot = ch.Potential.logarithmic(2.0)
    params = make_problem(n=48, nt=48, potential=pot)
    init = preset_initial_data("random_interior", params.grid, pot,
                               amplitude=0.3, seed=7)
    u = ch.ControlField.constant(params.grid, params.time_grid, 0.0, 0.0, 2.0)
    traj = ch.solve_state(params, init, u)
    rep = ch.separation_report(traj, pot)
    assert rep.delta_sep >= 0.01
    assert np.all(np.isfinite(traj.data))


def test_control_shape_validation():
    params = make_problem(n=32, nt=8)
    init = equilibrium_init(params)
    bad = ch.ControlField(np.zeros((3,) + params.grid.shape), 0.0, 1.0)
    with pytest.raises(ch.ShapeMismatchError):
        ch.solve_state(params, init, bad)
    with pytest.raises(ConfigError):
        ch.ControlField.constant(params.grid, params.time_grid, 0.5,
                                 lower=1.0, upper=0.0).validate(
            params.grid, params.time_grid)
