import numpy as np
import pytest

import chcontrol as ch
from chcontrol.errors import GridMismatchError, ShapeMismatchError, TimeDomainError


def test_grid_invariants():
    g = ch.Grid.line(64, 2.0)
    assert g.dim == 1
    assert g.h == (2.0 / 64,)
    assert g.cell_count == 64
    assert g.cell_volume == 2.0 / 64
    g2 = ch.Grid.rectangle(8, 16, 1.0, 2.0)
    assert g2.cell_count == 128
    assert g2.cell_volume == (1.0 / 8) * (2.0 / 16)
    with pytest.raises(GridMismatchError):
        ch.Grid.line(2)
    with pytest.raises(GridMismatchError):
        ch.Grid((8, 8, 8), (1.0, 1.0, 1.0))


def test_laplacian_of_constant_is_zero():
    g = ch.Grid.line(32)
    out = ch.laplacian_neumann(g, g.full(3.7))
    assert np.all(out == 0.0)
    g2 = ch.Grid.rectangle(8, 8)
    assert np.all(ch.laplacian_neumann(g2, g2.full(-1.5)) == 0.0)


def test_laplacian_exact_on_quadratics():
    g = ch.Grid.line(64)
    x = g.axis_centers(0)
    out = ch.laplacian_neumann(g, x**2)
    assert np.allclose(out[1:-1], 2.0, rtol=1e-9, atol=1e-9)


def test_laplacian_conservation_random_fields():
    # discrete divergence theorem with reflecting ghosts, 100 fields
    rng = np.random.default_rng(11)
    for g in (ch.Grid.line(64), ch.Grid.rectangle(12, 9)):
        for _ in range(100):
            f = rng.standard_normal(g.shape)
            total = ch.integrate(g, ch.laplacian_neumann(g, f))
            assert abs(total) <= 1e-12 * max(np.abs(f).max(), 1.0)


def test_laplacian_stencil_symmetry():
    rng = np.random.default_rng(5)
    for g in (ch.Grid.line(48), ch.Grid.rectangle(9, 7)):
        for _ in range(25):
            f = rng.standard_normal(g.shape)
            h = rng.standard_normal(g.shape)
            a = ch.inner(g, ch.laplacian_neumann(g, f), h)
            b = ch.inner(g, f, ch.laplacian_neumann(g, h))
            assert abs(a - b) <= 1e-12 * max(abs(a), abs(b), 1.0)


def test_integrate_examples():
    g = ch.Grid.line(64)
    assert ch.integrate(g, g.full(1.0)) == 1.0
    assert ch.integrate(g, g.zeros()) == 0.0
    x = g.axis_centers(0)
    assert ch.integrate(g, x) == 0.5  # midpoint rule exact for linears


def test_inner_product():
    g = ch.Grid.line(32)
    rng = np.random.default_rng(2)
    f = rng.standard_normal(g.shape)
    h = rng.standard_normal(g.shape)
    assert ch.inner(g, f, h) == ch.inner(g, h, f)  # bitwise symmetric
    assert ch.inner(g, f, f) > 0  # vanishes only for the zero field
    assert ch.inner(g, g.zeros(), g.zeros()) == 0.0
    assert ch.inner(g, g.full(1.0), g.full(1.0)) == 1.0
    with pytest.raises(GridMismatchError):
        ch.inner(g, f, np.zeros(31))


def test_time_grid():
    tg = ch.TimeGrid(2.0, 8)
    assert tg.dt == 0.25
    assert tg.times[0] == 0.0 and tg.times[-1] == 2.0
    assert tg.nearest_node(0.26) == (1, pytest.approx(0.01))
    with pytest.raises(TimeDomainError):
        ch.TimeGrid(1.0, 0)
    with pytest.raises(TimeDomainError):
        tg.clamp(2.5)


def _linear_trajectory(g, tg, field):
    data = np.zeros((tg.steps + 1, 3) + g.shape)
    for k, t in enumerate(tg.times):
        data[k, 1] = t * field
    return ch.Trajectory(g, tg, data, ("mu", "phi", "sigma"))


def test_interpolation_exact_at_nodes():
    g = ch.Grid.line(16)
    tg = ch.TimeGrid(1.0, 10)
    rng = np.random.default_rng(7)
    data = rng.standard_normal((11, 3) + g.shape)
    traj = ch.Trajectory(g, tg, data, ("mu", "phi", "sigma"))
    for k in (0, 3, 10):
        out = ch.interpolate_in_time(traj, "phi", tg.times[k])
        assert np.array_equal(out, data[k, 1])


def test_interpolation_linear_in_time():
    g = ch.Grid.line(16)
    tg = ch.TimeGrid(1.0, 10)
    rng = np.random.default_rng(8)
    field = rng.standard_normal(g.shape)
    traj = _linear_trajectory(g, tg, field)
    out = ch.interpolate_in_time(traj, "phi", 0.3)
    assert np.abs(out - 0.3 * field).max() <= 1e-14


def test_interpolation_convexity_and_domain():
    g = ch.Grid.line(8)
    tg = ch.TimeGrid(1.0, 5)
    rng = np.random.default_rng(9)
    data = rng.standard_normal((6, 3) + g.shape)
    traj = ch.Trajectory(g, tg, data, ("mu", "phi", "sigma"))
    for tau in rng.uniform(0, 1, 20):
        out = ch.interpolate_in_time(traj, "phi", tau)
        k = min(int(tau / tg.dt), 4)
        lo = np.minimum(data[k, 1], data[k + 1, 1])
        hi = np.maximum(data[k, 1], data[k + 1, 1])
        assert np.all(out >= lo - 1e-14) and np.all(out <= hi + 1e-14)
    with pytest.raises(TimeDomainError):
        ch.interpolate_in_time(traj, "phi", 1.5)


def test_snapshot_roundtrip(tmp_path):
    for g in (ch.Grid.line(16), ch.Grid.rectangle(5, 7)):
        rng = np.random.default_rng(3)
        f = rng.standard_normal(g.shape)
        path = tmp_path / f"f{g.dim}.fld"
        ch.write_snapshot(path, g, f)
        back = ch.read_snapshot(path, g)
        assert np.array_equal(back, f)
        raw = path.read_bytes()
        assert raw[:6] == b"CHFLD1"
        assert len(raw) == 32 + 8 * g.cell_count


def test_snapshot_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.fld"
    path.write_bytes(b"NOTFLD" + b"\0" * 100)
    with pytest.raises(ShapeMismatchError):
        ch.read_snapshot(path)


def test_trajectory_manifest_roundtrip(tmp_path):
    g = ch.Grid.line(12)
    tg = ch.TimeGrid(0.5, 4)
    rng = np.random.default_rng(4)
    data = rng.standard_normal((5, 3) + g.shape)
    traj = ch.Trajectory(g, tg, data, ("mu", "phi", "sigma"))
    manifest = ch.write_trajectory(tmp_path / "traj", traj)
    back = ch.read_trajectory(manifest)
    assert back.names == traj.names
    assert back.grid == traj.grid
    assert np.array_equal(back.data, traj.data)
