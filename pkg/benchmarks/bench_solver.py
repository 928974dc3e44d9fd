"""Benchmark: numba kernels against the numpy/LAPACK fallback.

Times the forward, linearized and adjoint solves on 1D problems of
increasing size under both backends (the env flag CHCONTROL_NUMBA picks
the default; here both are driven explicitly via kernels.set_backend).

Run from the repository root:

    python benchmarks/bench_solver.py [--sizes 128 256 512] [--steps 256]
"""

import argparse
import time

import numpy as np

import chcontrol as ch
from chcontrol import kernels


def build_problem(n, nt):
    grid = ch.Grid.line(n, 1.0)
    tg = ch.TimeGrid(1.0, nt)
    params = ch.ModelParams(0.1, 0.1, ch.Potential.quartic(),
                            ch.Proliferation.smooth_ramp(1.0, 0.5), grid, tg)
    mu0 = grid.full(ch.potential_eval(params.potential, 0.2, 1))
    init = ch.InitialData(mu0.copy(), grid.full(0.2), mu0.copy())
    u = ch.ControlField.constant(grid, tg, 1.0, 0.0, 2.0)
    cost = ch.CostSpec(
        b0=1e-3, b1=1.0, b3=1.0, b5=0.01, b6=1.0,
        phi_q=ch.constant_trajectory(grid, tg, -0.5),
        sigma_q=ch.constant_trajectory(grid, tg, 0.375),
        phi_omega=grid.full(-0.5), tau_star=0.5,
    )
    return params, init, u, cost


def time_once(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n, nt):
    params, init, u, cost = build_problem(n, nt)
    tg = params.time_grid
    state = ch.solve_state(params, init, u)
    rng = np.random.default_rng(0)
    h = rng.standard_normal(u.values.shape)
    rows = {}
    for backend in ("numpy", "numba") if kernels.HAVE_NUMBA else ("numpy",):
        kernels.set_backend(backend)
        ch.solve_state(params, init, u)  # warm the jit cache
        rows[backend] = (
            time_once(lambda: ch.solve_state(params, init, u)),
            time_once(lambda: ch.solve_linearized(params, state, h)),
            time_once(lambda: ch.solve_adjoint(params, state, nt // 2, cost)),
        )
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512])
    parser.add_argument("--steps", type=int, default=256)
    args = parser.parse_args()

    print(f"{'n':>6} {'backend':>8} {'forward':>10} {'linearized':>11} "
          f"{'adjoint':>10} {'speedup':>8}")
    for n in args.sizes:
        rows = bench(n, args.steps)
        base = rows["numpy"][0]
        for backend, (fw, lin, adj) in rows.items():
            speedup = base / fw if backend == "numba" else 1.0
            print(f"{n:>6} {backend:>8} {fw:>9.3f}s {lin:>10.3f}s "
                  f"{adj:>9.3f}s {speedup:>7.2f}x")


if __name__ == "__main__":
    main()
