import numpy as np
import pytest

import chcontrol as ch
from chcontrol import kernels
from conftest import equilibrium_init, make_problem, midpoint_control


@pytest.fixture
def restore_backend():
    previous = kernels.active_backend()
    yield
    kernels.set_backend(previous)


def test_backend_selection(restore_backend):
    kernels.set_backend("numpy")
    assert kernels.active_backend() == "numpy"
    if kernels.HAVE_NUMBA:
        kernels.set_backend("numba")
        assert kernels.active_backend() == "numba"
    with pytest.raises(ValueError):
        kernels.set_backend("cuda")


def test_laplacian_backends_agree(restore_backend):
    rng = np.random.default_rng(0)
    f1 = rng.standard_normal(64)
    f2 = rng.standard_normal((12, 9))
    kernels.set_backend("numpy")
    a1 = kernels.lap1d(f1, 64.0**2)
    a2 = kernels.lap2d(f2, 144.0, 81.0)
    if not kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    kernels.set_backend("numba")
    b1 = kernels.lap1d(f1, 64.0**2)
    b2 = kernels.lap2d(f2, 144.0, 81.0)
    assert np.allclose(a1, b1, rtol=0, atol=1e-9)
    assert np.allclose(a2, b2, rtol=0, atol=1e-9)


def test_block_solver_backends_agree(restore_backend):
    rng = np.random.default_rng(1)
    n = 40
    diag = rng.standard_normal((n, 3, 3))
    for i in range(n):  # make blocks safely dominant
        diag[i] += np.eye(3) * 10.0
    off = -1.7
    rhs = rng.standard_normal((n, 3))
    kernels.set_backend("numpy")
    xa = kernels.solve_block_tridiag(diag, off, rhs)
    if not kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    kernels.set_backend("numba")
    xb = kernels.solve_block_tridiag(diag, off, rhs)
    assert np.abs(xa - xb).max() <= 1e-10
    # both satisfy the block-tridiagonal system
    res = diag @ xa[:, :, None]
    res = res[:, :, 0]
    res[1:] += off * xa[:-1]
    res[:-1] += off * xa[1:]
    assert np.abs(res - rhs).max() <= 1e-10


def test_full_solve_backend_parity(restore_backend):
    params = make_problem(n=48, nt=16)
    init = equilibrium_init(params)
    init.sigma0 = init.sigma0 + 0.2 * np.cos(np.pi * params.grid.axis_centers(0))
    u = midpoint_control(params)
    kernels.set_backend("numpy")
    a = ch.solve_state(params, init, u)
    if not kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    kernels.set_backend("numba")
    b = ch.solve_state(params, init, u)
    assert np.abs(a.data - b.data).max() <= 1e-12
