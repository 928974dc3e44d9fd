"""Configuration parsing, experiment orchestration and artifact emission.

A JSON experiment config fully determines a run: model constants,
potential and proliferation choice, grid and time resolution, initial
data (preset or snapshots), cost weights and targets, control bounds,
optimizer settings and verification toggles. Physics fields have no
defaults; only solver and optimizer tolerances may be omitted. Identical
config and seed produce bit-identical artifacts (no timestamps are
written).

Subcommands:

    chcontrol run <config>        execute the pipeline named in the config
    chcontrol simulate <config>   forward solve only
    chcontrol verify <config>     run the verification oracle suite

Flags ``--seed``, ``--out-dir`` and ``--threads`` override the config.
Exit codes: 0 success, 2 config error, 3 solver error, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ChControlError, ConfigError, SolverError
from .fields import (
    Grid,
    TimeGrid,
    read_snapshot,
    read_trajectory,
    write_snapshot,
    write_trajectory,
)
from .objective import CostSpec, Relaxation, constant_trajectory, reduced_cost
from .optimizer import ArmijoParams, OptimizerConfig, optimize
from .potentials import Potential, Proliferation, potential_eval
from .state import ControlField, InitialData, ModelParams, separation_report, solve_state
from .verification import (
    duality_check,
    fd_gradient_check,
    lipschitz_check,
    mass_balance_check,
)

_PIPELINES = ("simulate", "optimize", "verify", "all")


def _version_string() -> str:
    try:
        from importlib.metadata import version

        base = version("chcontrol")
    except Exception:
        base = "0.1.0"
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).parent, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{base}+g{out.stdout.strip()}"
    except Exception:
        pass
    return base


# ---------------------------------------------------------------------------
# Initial-data presets
# ---------------------------------------------------------------------------


def _preset_arg(kwargs, key, preset):
    if key not in kwargs:
        raise ConfigError(f"initial.{key}: required by preset {preset!r}")
    return kwargs[key]


def preset_initial_data(name: str, grid: Grid, potential: Potential,
                        **kwargs) -> InitialData:
    """Named initial data constructors.

    equilibrium(value): the stationary triple (F'(c), c, F'(c)).
    tanh_front(width, position): phase front along the first axis.
    random_interior(amplitude, seed): smooth seeded cosine-mode noise with
        max |phi0| = amplitude.

    The non-equilibrium presets set mu0 = F'(phi0) and sigma0 = mu0, which
    keeps all fields order one and the exchange term initially balanced.
    """
    if name == "equilibrium":
        c = float(_preset_arg(kwargs, "value", name))
        lo, hi = potential.domain
        if not (lo < c < hi):
            raise ConfigError(f"initial.value: {c} outside the potential domain "
                              f"({lo}, {hi})")
        mu = grid.full(potential_eval(potential, c, 1))
        return InitialData(mu, grid.full(c), mu.copy())
    if name == "tanh_front":
        width = float(_preset_arg(kwargs, "width", name))
        position = float(_preset_arg(kwargs, "position", name))
        if width <= 0:
            raise ConfigError("initial.width: must be positive")
        x = grid.axis_centers(0)
        phi = np.tanh((x - position) / width)
        if grid.dim == 2:
            phi = np.repeat(phi[:, None], grid.n[1], axis=1)
        mu = potential_eval(potential, phi, 1)
        return InitialData(mu, phi, mu.copy())
    if name == "random_interior":
        amplitude = float(_preset_arg(kwargs, "amplitude", name))
        seed = int(kwargs.get("seed", 0))
        rng = np.random.default_rng(seed)
        modes = 4
        phi = np.zeros(grid.shape)
        x = grid.axis_centers(0) / grid.extents[0]
        if grid.dim == 1:
            for m in range(1, modes + 1):
                phi += rng.standard_normal() / m**2 * np.cos(np.pi * m * x)
        else:
            y = grid.axis_centers(1) / grid.extents[1]
            for m in range(modes + 1):
                for l in range(modes + 1):
                    if m == l == 0:
                        continue
                    phi += (rng.standard_normal() / (m**2 + l**2)
                            * np.outer(np.cos(np.pi * m * x), np.cos(np.pi * l * y)))
        peak = np.abs(phi).max()
        if peak > 0:
            phi *= amplitude / peak
        lo, hi = potential.domain
        if not (lo < phi.min() and phi.max() < hi):
            raise ConfigError(f"initial.amplitude: {amplitude} leaves the potential "
                              f"domain ({lo}, {hi})")
        mu = potential_eval(potential, phi, 1)
        return InitialData(mu, phi, mu.copy())
    raise ConfigError(f"initial.preset: unknown preset {name!r}")


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def _req(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}.{key}: required field is missing")
    return d[key]


def _num(d: dict, key: str, where: str) -> float:
    v = _req(d, key, where)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


@dataclass
class ExperimentConfig:
    raw: dict
    pipeline: str
    seed: int
    output_dir: Path
    threads: int | None
    params: ModelParams
    init: InitialData
    cost: CostSpec
    u0: ControlField
    tau0: float
    optimizer: OptimizerConfig
    verification: dict
    newton_tol: float = 1e-11
    newton_max_iter: int = 50


def _build_potential(d: dict) -> Potential:
    kind = _req(d, "kind", "model.potential")
    if kind == "quartic":
        return Potential.quartic()
    if kind == "logarithmic":
        lam = _num(d, "lam", "model.potential")
        if lam <= 0:
            raise ConfigError("model.potential.lam: must be positive")
        return Potential.logarithmic(lam)
    raise ConfigError(f"model.potential.kind: unknown kind {kind!r}")


def _build_proliferation(d: dict) -> Proliferation:
    kind = _req(d, "kind", "model.proliferation")
    p0 = _num(d, "p0", "model.proliferation")
    if p0 < 0:
        raise ConfigError("model.proliferation.p0: must be nonnegative")
    if kind == "constant":
        return Proliferation.constant(p0)
    if kind == "smooth_ramp":
        width = _num(d, "width", "model.proliferation")
        if width <= 0:
            raise ConfigError("model.proliferation.width: must be positive")
        return Proliferation.smooth_ramp(p0, width)
    raise ConfigError(f"model.proliferation.kind: unknown kind {kind!r}")


def _build_target_traj(d, grid, tg, where):
    if d is None:
        return None
    if "constant" in d:
        return constant_trajectory(grid, tg, float(d["constant"]))
    if "manifest" in d:
        traj = read_trajectory(d["manifest"])
        comp = d.get("component", traj.names[0])
        if traj.nframes != tg.steps + 1 or traj.grid.shape != grid.shape:
            raise ConfigError(f"{where}.manifest: trajectory does not match the "
                              f"configured grids")
        return traj.component(comp).copy()
    raise ConfigError(f"{where}: expected 'constant' or 'manifest'")


def _build_field(d, grid, where):
    if d is None:
        return None
    if "constant" in d:
        return grid.full(float(d["constant"]))
    if "snapshot" in d:
        return read_snapshot(d["snapshot"], grid)
    raise ConfigError(f"{where}: expected 'constant' or 'snapshot'")


def _build_bound(v, grid, where):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if isinstance(v, str):
        return read_snapshot(v, grid)
    raise ConfigError(f"{where}: expected a number or a snapshot path")


def parse_config(path, seed=None, out_dir=None, threads=None) -> ExperimentConfig:
    """Parse and validate an experiment config; all module invariants are
    re-checked here so a bad file fails before any solve starts."""
    path = Path(path)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})")

    raw = copy.deepcopy(raw)
    pipeline = raw.get("pipeline", "simulate")
    if pipeline not in _PIPELINES:
        raise ConfigError(f"pipeline: must be one of {_PIPELINES}, got {pipeline!r}")
    raw["pipeline"] = pipeline
    if seed is not None:
        raw["seed"] = int(seed)
    raw.setdefault("seed", 0)
    if out_dir is not None:
        raw["output_dir"] = str(out_dir)
    raw.setdefault("output_dir", "out")
    if threads is not None:
        raw["threads"] = int(threads)

    model = _req(raw, "model", "config")
    alpha = _num(model, "alpha", "model")
    beta = _num(model, "beta", "model")
    if alpha <= 0:
        raise ConfigError("model.alpha: must be positive (alpha and beta are "
                          "positive relaxation constants)")
    if beta <= 0:
        raise ConfigError("model.beta: must be positive (alpha and beta are "
                          "positive relaxation constants)")
    potential = _build_potential(_req(model, "potential", "model"))
    prolif = _build_proliferation(_req(model, "proliferation", "model"))

    gd = _req(raw, "grid", "config")
    n = _req(gd, "n", "grid")
    extents = _req(gd, "extents", "grid")
    try:
        grid = Grid(tuple(n), tuple(extents))
    except ChControlError as exc:
        raise ConfigError(f"grid: {exc}")

    td = _req(raw, "time", "config")
    horizon = _num(td, "horizon", "time")
    steps = int(_num(td, "steps", "time"))
    if horizon <= 0 or steps < 1:
        raise ConfigError("time: horizon must be positive and steps >= 1")
    tg = TimeGrid(horizon, steps)

    params = ModelParams(alpha, beta, potential, prolif, grid, tg)

    idict = _req(raw, "initial", "config")
    if "preset" in idict:
        kwargs = {k: v for k, v in idict.items() if k != "preset"}
        init = preset_initial_data(idict["preset"], grid, potential, **kwargs)
    elif "snapshots" in idict:
        snaps = idict["snapshots"]
        init = InitialData(
            read_snapshot(_req(snaps, "mu", "initial.snapshots"), grid),
            read_snapshot(_req(snaps, "phi", "initial.snapshots"), grid),
            read_snapshot(_req(snaps, "sigma", "initial.snapshots"), grid),
        )
    else:
        raise ConfigError("initial: expected 'preset' or 'snapshots'")
    init.validate(grid, potential)

    bd = _req(raw, "bounds", "config")
    lower = _build_bound(_req(bd, "lower", "bounds"), grid, "bounds.lower")
    upper = _build_bound(_req(bd, "upper", "bounds"), grid, "bounds.upper")
    if np.any(np.asarray(lower) > np.asarray(upper)):
        raise ConfigError("bounds: lower must not exceed upper anywhere")

    cd = _req(raw, "cost", "config")
    weights = {k: _num(cd, k, "cost") for k in ("b0", "b1", "b2", "b3", "b4", "b5", "b6")}
    if any(v < 0 for v in weights.values()):
        raise ConfigError("cost: weights b0..b6 must be nonnegative")
    tau_star = _num(cd, "tau_star", "cost")
    targets = cd.get("targets", {})
    relaxation = None
    if cd.get("relaxation") is not None:
        rd = cd["relaxation"]
        relaxation = Relaxation(
            _num(rd, "gamma", "cost.relaxation"),
            _num(rd, "eps", "cost.relaxation"),
            _build_field(_req(rd, "sigma_omega", "cost.relaxation"), grid,
                         "cost.relaxation.sigma_omega"),
        )
    cost = CostSpec(
        **weights,
        phi_q=_build_target_traj(targets.get("phi_q"), grid, tg, "cost.targets.phi_q"),
        sigma_q=_build_target_traj(targets.get("sigma_q"), grid, tg,
                                   "cost.targets.sigma_q"),
        phi_omega=_build_field(targets.get("phi_omega"), grid,
                               "cost.targets.phi_omega"),
        tau_star=tau_star,
        relaxation=relaxation,
    )
    try:
        cost.validate(grid, tg)
    except ChControlError as exc:
        raise ConfigError(str(exc))

    ctl = raw.get("control", {})
    u0_choice = ctl.get("initial", "midpoint")
    if u0_choice == "midpoint":
        lo_arr = np.broadcast_to(np.asarray(lower, dtype=float), grid.shape)
        hi_arr = np.broadcast_to(np.asarray(upper, dtype=float), grid.shape)
        mid = 0.5 * (lo_arr + hi_arr)
        if not np.all(np.isfinite(mid)):
            raise ConfigError("control.initial: midpoint undefined for unbounded "
                              "box, give a number")
        vals = np.broadcast_to(mid, (tg.steps + 1,) + grid.shape).copy()
        u0 = ControlField(vals, lower, upper)
    elif isinstance(u0_choice, (int, float)) and not isinstance(u0_choice, bool):
        u0 = ControlField.constant(grid, tg, float(u0_choice), lower, upper)
    else:
        raise ConfigError("control.initial: expected 'midpoint' or a number")
    tau0 = float(ctl.get("tau0", horizon / 2))
    if not 0 <= tau0 <= horizon:
        raise ConfigError(f"control.tau0: {tau0} outside [0, {horizon}]")

    od = raw.get("optimizer", {})
    ad = od.get("armijo", {})
    opt_config = OptimizerConfig(
        max_outer_iters=int(od.get("max_outer_iters", 1000)),
        armijo=ArmijoParams(
            c1=float(ad.get("c1", 1e-4)),
            backtrack=float(ad.get("backtrack", 0.5)),
            s0=float(ad.get("s0", 1.0)),
            max_backtracks=int(ad.get("max_backtracks", 30)),
        ),
        grad_tol=float(od.get("grad_tol", 1e-5)),
        tau_step_scale=float(od.get("tau_step_scale", 1.0)),
    )

    verification = raw.get("verification", {})
    sd = raw.get("solver", {})

    return ExperimentConfig(
        raw=raw, pipeline=pipeline, seed=int(raw["seed"]),
        output_dir=Path(raw["output_dir"]), threads=raw.get("threads"),
        params=params, init=init, cost=cost, u0=u0, tau0=tau0,
        optimizer=opt_config, verification=verification,
        newton_tol=float(sd.get("newton_tol", 1e-11)),
        newton_max_iter=int(sd.get("newton_max_iter", 50)),
    )


# ---------------------------------------------------------------------------
# Artifact writers
# ---------------------------------------------------------------------------


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_diagnostics(path, traj):
    diag = traj.diagnostics
    rows = list(diag.rows()) if diag is not None else []
    _write_csv(path, ["step", "newton_iters", "mass_residual", "delta_sep"], rows)


def _breakdown_row(iteration, tau, bd):
    terms = bd.terms()
    return [iteration, tau] + [terms[k] for k in sorted(terms)] + [bd.total]


def _breakdown_header():
    bd_keys = sorted(["tracking_q", "tracking_omega", "nutrient_q", "tumour_mass",
                      "linear_time", "quadratic_time", "control_energy",
                      "relaxed_term"])
    return ["iteration", "tau"] + bd_keys + ["total"]


def _write_control(directory, u, tg, grid):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k in range(tg.steps + 1):
        fname = f"u_{k:05d}.fld"
        write_snapshot(directory / fname, grid, u.values[k])
        paths.append(fname)
    manifest = {
        "format": "chcontrol-control-1",
        "grid": {"n": list(grid.n), "extents": list(grid.extents)},
        "time": {"horizon": tg.horizon, "steps": tg.steps},
        "times": [float(t) for t in tg.times],
        "snapshots": paths,
    }
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def _run_simulate(cfg: ExperimentConfig, out: Path) -> dict:
    params, tg, grid = cfg.params, cfg.params.time_grid, cfg.params.grid
    traj = solve_state(params, cfg.init, cfg.u0, newton_tol=cfg.newton_tol,
                       newton_max_iter=cfg.newton_max_iter)
    sim_dir = out / "simulate"
    sim_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory(sim_dir / "state", traj)
    _write_diagnostics(sim_dir / "diagnostics.csv", traj)
    bd = reduced_cost(traj, cfg.u0, cfg.cost.tau_star, cfg.cost)
    _write_csv(sim_dir / "breakdown.csv", _breakdown_header(),
               [_breakdown_row(0, cfg.cost.tau_star, bd)])
    result = {"cost_total": bd.total, "tau": cfg.cost.tau_star}
    if params.potential.singular:
        rep = separation_report(traj, params.potential)
        result["delta_sep"] = rep.delta_sep
        result["argmin_frame"] = rep.argmin_frame
    mass = mass_balance_check(traj, cfg.u0, params)
    result["mass_residual"] = mass.residual
    return result


def _run_optimize(cfg: ExperimentConfig, out: Path) -> dict:
    params, tg, grid = cfg.params, cfg.params.time_grid, cfg.params.grid
    res = optimize(params, cfg.init, cfg.cost, cfg.optimizer, cfg.u0, cfg.tau0)
    opt_dir = out / "optimize"
    opt_dir.mkdir(parents=True, exist_ok=True)
    header = _breakdown_header() + ["stat_u", "stat_tau", "time_case",
                                    "tau_index", "snap_error"]
    rows = []
    for rec in res.history:
        rows.append(_breakdown_row(rec.iteration, rec.tau, rec.breakdown)
                    + [rec.stat_u, rec.stat_tau, rec.time_case, rec.tau_index,
                       rec.snap_error])
    _write_csv(opt_dir / "history.csv", header, rows)
    _write_control(opt_dir / "control", res.u_opt, tg, grid)
    write_trajectory(opt_dir / "state", res.state)
    summary = {
        "tau_opt": res.tau_opt,
        "time_case": res.time_case,
        "converged": res.converged,
        "iterations": res.iterations,
        "stat_u": res.stat_u,
        "stat_tau": res.stat_tau,
        "cost_total": res.history[-1].breakdown.total,
    }
    with open(opt_dir / "optimum.json", "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return summary


def _run_verify(cfg: ExperimentConfig, out: Path) -> dict:
    params = cfg.params
    vd = cfg.verification
    checks = vd.get("checks", ["gradient", "duality", "lipschitz", "mass"])
    seed = int(vd.get("seed", cfg.seed if cfg.seed else 20240808))
    tau = float(vd.get("tau", cfg.cost.tau_star))
    ver_dir = out / "verify"
    ver_dir.mkdir(parents=True, exist_ok=True)
    summary = {}

    state = solve_state(params, cfg.init, cfg.u0, newton_tol=cfg.newton_tol,
                        newton_max_iter=cfg.newton_max_iter)
    k_tau, _ = params.time_grid.nearest_node(tau)

    if "gradient" in checks:
        gopts = vd.get("gradient", {})
        deltas = [float(d) for d in gopts.get("deltas", [0.5, 0.2, 0.1, 1e-4])]
        slope_deltas = gopts.get("slope_deltas", [d for d in deltas if d >= 0.1]
                                 or None)
        rep = fd_gradient_check(
            params, cfg.init, cfg.cost, cfg.u0, tau,
            directions=int(gopts.get("directions", 5)), deltas=deltas,
            slope_deltas=slope_deltas, seed=seed)
        tol = float(gopts.get("tol", 1e-6))
        check_delta = float(gopts.get("check_delta", min(deltas)))
        ok = rep.passed(check_delta, tol)
        (ver_dir / "gradient_check.txt").write_text(
            rep.to_text() + f"result: {'PASS' if ok else 'FAIL'}\n")
        summary["gradient"] = {"passed": ok,
                               "max_rel_error": rep.max_rel_error(check_delta)}

    if "duality" in checks:
        dopts = vd.get("duality", {})
        rep = duality_check(params, state, k_tau, cfg.cost,
                            directions=int(dopts.get("directions", 10)), seed=seed)
        ok = rep.passed(float(dopts.get("tol", 1e-9)))
        (ver_dir / "duality_check.txt").write_text(
            rep.to_text() + f"result: {'PASS' if ok else 'FAIL'}\n")
        summary["duality"] = {"passed": ok, "max_mismatch": rep.max_mismatch}

    if "lipschitz" in checks:
        lopts = vd.get("lipschitz", {})
        rep = lipschitz_check(
            params, cfg.init, cfg.u0, pairs=int(lopts.get("pairs", 5)),
            magnitudes=[float(m) for m in lopts.get("magnitudes",
                                                    [1e-1, 1e-2, 1e-3])],
            seed=seed)
        ok = rep.passed(float(lopts.get("pair_spread_tol", 10.0)),
                        float(lopts.get("magnitude_spread_tol", 3.0)))
        (ver_dir / "lipschitz_check.txt").write_text(
            rep.to_text() + f"result: {'PASS' if ok else 'FAIL'}\n")
        summary["lipschitz"] = {"passed": ok,
                                "pair_spread": rep.spread_across_pairs(),
                                "magnitude_spread": rep.spread_across_magnitudes()}

    if "mass" in checks:
        mopts = vd.get("mass", {})
        rep = mass_balance_check(state, cfg.u0, params)
        ok = rep.passed(float(mopts.get("tol", 1e-10)))
        (ver_dir / "mass_balance.txt").write_text(
            rep.to_text() + f"result: {'PASS' if ok else 'FAIL'}\n")
        summary["mass"] = {"passed": ok, "residual": rep.residual}

    with open(ver_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return summary


def run(config_path, pipeline=None, seed=None, out_dir=None, threads=None) -> int:
    """Execute a config. Returns the process exit code."""
    try:
        cfg = parse_config(config_path, seed=seed, out_dir=out_dir, threads=threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if cfg.threads and kernels.HAVE_NUMBA:
        try:  # best effort; the kernels are serial either way
            import numba

            numba.set_num_threads(int(cfg.threads))
        except Exception:
            pass
    pipeline = pipeline or cfg.pipeline
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)

    results = {}
    try:
        if pipeline in ("simulate", "all"):
            results["simulate"] = _run_simulate(cfg, out)
        if pipeline in ("optimize", "all"):
            results["optimize"] = _run_optimize(cfg, out)
        if pipeline in ("verify", "all"):
            results["verify"] = _run_verify(cfg, out)
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    echo = copy.deepcopy(cfg.raw)
    echo["pipeline"] = pipeline
    summary = {"version": _version_string(), "config": echo, "results": results}
    with open(out / "run_summary.json", "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")

    if pipeline in ("verify", "all"):
        checks = results.get("verify", {})
        if not all(entry["passed"] for entry in checks.values()):
            print("verification FAILED", file=sys.stderr)
            return 4
    return 0


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="chcontrol",
        description="Optimal treatment-time control of a viscous Cahn-Hilliard "
                    "tumour-growth model",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "execute the pipeline selected in the config"),
        ("simulate", "forward solve only"),
        ("verify", "run the verification oracle suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a JSON experiment config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", default=None)
        p.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)
    pipeline = None if args.command == "run" else args.command
    sys.exit(run(args.config, pipeline=pipeline, seed=args.seed,
                 out_dir=args.out_dir, threads=args.threads))


if __name__ == "__main__":
    main()
