import copy
import hashlib
import json

import numpy as np
import pytest

import chcontrol as ch
from chcontrol.cli import parse_config, preset_initial_data, run
from chcontrol.errors import ConfigError

TINY_CONFIG = {
    "pipeline": "simulate",
    "seed": 3,
    "model": {
        "alpha": 0.1,
        "beta": 0.1,
        "potential": {"kind": "quartic"},
        "proliferation": {"kind": "smooth_ramp", "p0": 1.0, "width": 0.5},
    },
    "grid": {"n": [32], "extents": [1.0]},
    "time": {"horizon": 0.25, "steps": 16},
    "initial": {"preset": "equilibrium", "value": 0.2},
    "bounds": {"lower": 0.0, "upper": 2.0},
    "cost": {
        "b0": 0.001, "b1": 1.0, "b2": 0.0, "b3": 1.0, "b4": 0.0,
        "b5": 0.01, "b6": 1.0, "tau_star": 0.125,
        "targets": {
            "phi_q": {"constant": -0.5},
            "sigma_q": {"constant": 0.375},
            "phi_omega": {"constant": -0.5},
        },
    },
    "control": {"initial": "midpoint", "tau0": 0.125},
}


def _write(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_preset_equilibrium():
    g = ch.Grid.line(32)
    pot = ch.Potential.quartic()
    init = preset_initial_data("equilibrium", g, pot, value=0.0)
    assert np.all(init.mu0 == 0.0)
    assert np.all(init.phi0 == 0.0)
    assert np.all(init.sigma0 == 0.0)
    init = preset_initial_data("equilibrium", g, pot, value=0.5)
    assert np.all(init.mu0 == 0.5**3 - 0.5)
    with pytest.raises(ConfigError):
        preset_initial_data("equilibrium", g, ch.Potential.logarithmic(2.0),
                            value=1.5)


def test_preset_random_interior():
    g = ch.Grid.line(64)
    pot = ch.Potential.logarithmic(2.0)
    init = preset_initial_data("random_interior", g, pot, amplitude=0.1, seed=4)
    assert init.phi0.min() >= -0.1 and init.phi0.max() <= 0.1
    assert np.abs(init.phi0).max() == pytest.approx(0.1)
    # seeded determinism
    again = preset_initial_data("random_interior", g, pot, amplitude=0.1, seed=4)
    assert np.array_equal(init.phi0, again.phi0)


def test_preset_tanh_front():
    g = ch.Grid.line(64)
    init = preset_initial_data("tanh_front", g, ch.Potential.quartic(),
                               width=0.1, position=0.5)
    assert init.phi0[0] < -0.9 and init.phi0[-1] > 0.9
    with pytest.raises(ConfigError):
        preset_initial_data("tanh_front", g, ch.Potential.quartic(),
                            width=-1.0, position=0.5)
    with pytest.raises(ConfigError):
        preset_initial_data("no_such", g, ch.Potential.quartic())


def test_config_rejects_nonpositive_beta(tmp_path, capsys):
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["model"]["beta"] = 0.0
    code = run(_write(tmp_path, cfg), out_dir=tmp_path / "out")
    assert code == 2
    err = capsys.readouterr().err
    assert "model.beta" in err and "positive" in err


def test_config_rejects_crossed_bounds(tmp_path):
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["bounds"] = {"lower": 2.0, "upper": 0.0}
    assert run(_write(tmp_path, cfg), out_dir=tmp_path / "out") == 2


def test_config_rejects_missing_field(tmp_path):
    cfg = copy.deepcopy(TINY_CONFIG)
    del cfg["model"]["alpha"]
    with pytest.raises(ConfigError, match="model.alpha"):
        parse_config(_write(tmp_path, cfg))


def test_config_rejects_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        parse_config(path)


def test_config_rejects_unknown_choices(tmp_path):
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["pipeline"] = "train"
    with pytest.raises(ConfigError, match="pipeline"):
        parse_config(_write(tmp_path, cfg, "a.json"))
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["model"]["potential"] = {"kind": "sextic"}
    with pytest.raises(ConfigError, match="potential"):
        parse_config(_write(tmp_path, cfg, "b.json"))
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["cost"]["b1"] = -1.0
    with pytest.raises(ConfigError, match="cost"):
        parse_config(_write(tmp_path, cfg, "c.json"))
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["cost"]["tau_star"] = 2.0
    with pytest.raises(ConfigError, match="tau_star"):
        parse_config(_write(tmp_path, cfg, "d.json"))


def test_solver_error_exit_code(tmp_path):
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["initial"] = {"preset": "tanh_front", "width": 0.05, "position": 0.5}
    cfg["solver"] = {"newton_max_iter": 1}
    assert run(_write(tmp_path, cfg), out_dir=tmp_path / "out") == 3


def _hash_tree(root):
    chunks = []
    for path in sorted(root.rglob("*")):
        if path.is_file():
            chunks.append(path.relative_to(root).as_posix().encode())
            chunks.append(hashlib.sha256(path.read_bytes()).digest())
    return hashlib.sha256(b"".join(chunks)).hexdigest()


def test_simulate_artifacts_and_determinism(tmp_path):
    # identical config and seed produce bit-identical artifacts
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["output_dir"] = str(tmp_path / "out")
    cfg_path = _write(tmp_path, cfg)
    assert run(cfg_path) == 0
    out1 = tmp_path / "out"
    assert (out1 / "simulate" / "state" / "manifest.json").exists()
    assert (out1 / "simulate" / "diagnostics.csv").exists()
    assert (out1 / "simulate" / "breakdown.csv").exists()
    assert (out1 / "run_summary.json").exists()
    first = _hash_tree(out1)
    out1.rename(tmp_path / "out_first")
    assert run(cfg_path) == 0
    assert _hash_tree(out1) == first
    header = (out1 / "simulate" / "diagnostics.csv").read_text().splitlines()[0]
    assert header == "step,newton_iters,mass_residual,delta_sep"


def test_run_summary_round_trip(tmp_path):
    cfg_path = _write(tmp_path, TINY_CONFIG)
    out = tmp_path / "out"
    assert run(cfg_path, out_dir=out) == 0
    summary = json.loads((out / "run_summary.json").read_text())
    assert "version" in summary
    echo_path = tmp_path / "echo.json"
    echo_path.write_text(json.dumps(summary["config"]))
    cfg_a = parse_config(cfg_path, out_dir=out)
    cfg_b = parse_config(echo_path)
    assert cfg_b.raw == cfg_a.raw
    assert np.array_equal(cfg_b.init.phi0, cfg_a.init.phi0)
    assert cfg_b.cost.weights() == cfg_a.cost.weights()


def test_optimize_pipeline_artifacts(tmp_path):
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["pipeline"] = "optimize"
    cfg["optimizer"] = {"max_outer_iters": 60, "grad_tol": 1e-3}
    out = tmp_path / "out"
    assert run(_write(tmp_path, cfg), out_dir=out) == 0
    hist = (out / "optimize" / "history.csv").read_text().splitlines()
    assert "stat_u" in hist[0] and "time_case" in hist[0]
    assert len(hist) > 2
    optimum = json.loads((out / "optimize" / "optimum.json").read_text())
    assert optimum["converged"]
    assert (out / "optimize" / "control" / "manifest.json").exists()


def test_verify_pipeline_small(tmp_path):
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["pipeline"] = "verify"
    cfg["verification"] = {
        "checks": ["gradient", "duality", "lipschitz", "mass"],
        "tau": 0.125,
        "gradient": {"directions": 1, "deltas": [0.2, 1e-4],
                     "slope_deltas": [0.2], "tol": 1e-6, "check_delta": 1e-4},
        "duality": {"directions": 2, "tol": 1e-9},
        "lipschitz": {"pairs": 2, "magnitudes": [1e-1, 1e-2]},
        "mass": {"tol": 1e-10},
    }
    out = tmp_path / "out"
    assert run(_write(tmp_path, cfg), out_dir=out) == 0
    summary = json.loads((out / "verify" / "summary.json").read_text())
    assert all(entry["passed"] for entry in summary.values())
    for name in ("gradient_check", "duality_check", "lipschitz_check",
                 "mass_balance"):
        assert "PASS" in (out / "verify" / f"{name}.txt").read_text()


def test_verification_failure_exit_code(tmp_path):
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["pipeline"] = "verify"
    cfg["verification"] = {
        "checks": ["mass"],
        "tau": 0.125,
        "mass": {"tol": 1e-30},  # unsatisfiable on purpose
    }
    assert run(_write(tmp_path, cfg), out_dir=tmp_path / "out") == 4


def test_initial_from_snapshots(tmp_path):
    g = ch.Grid.line(32)
    rng = np.random.default_rng(8)
    paths = {}
    for name in ("mu", "phi", "sigma"):
        p = tmp_path / f"{name}.fld"
        ch.write_snapshot(p, g, rng.uniform(-0.5, 0.5, g.shape))
        paths[name] = str(p)
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["initial"] = {"snapshots": paths}
    parsed = parse_config(_write(tmp_path, cfg))
    assert parsed.init.phi0.shape == g.shape
    assert run(_write(tmp_path, cfg), out_dir=tmp_path / "out") == 0


def test_target_from_manifest(tmp_path):
    # a time-dependent tracking target loaded from a trajectory manifest
    g = ch.Grid.line(32)
    tg = ch.TimeGrid(0.25, 16)
    data = np.zeros((17, 3) + g.shape)
    data[:, 1] = np.linspace(-0.5, -0.2, 17)[:, None]
    target = ch.Trajectory(g, tg, data, ("mu", "phi", "sigma"))
    manifest = ch.write_trajectory(tmp_path / "target", target)
    cfg = copy.deepcopy(TINY_CONFIG)
    cfg["cost"]["targets"]["phi_q"] = {"manifest": str(manifest),
                                       "component": "phi"}
    parsed = parse_config(_write(tmp_path, cfg))
    assert parsed.cost.phi_q.shape == (17,) + g.shape
    assert parsed.cost.phi_q[0, 0] == -0.5 and parsed.cost.phi_q[-1, 0] == -0.2


def test_cli_main_entry(tmp_path, capsys):
    cfg_path = _write(tmp_path, TINY_CONFIG)
    with pytest.raises(SystemExit) as exc:
        from chcontrol.cli import main
        main(["simulate", str(cfg_path), "--out-dir", str(tmp_path / "o")])
    assert exc.value.code == 0


def test_shipped_verify_suite(tmp_path):
    # the shipped verification config passes all four checks end to end
    import pathlib

    cfg = pathlib.Path(__file__).resolve().parents[1] / "configs" / "verify-suite.json"
    out = tmp_path / "verify"
    assert run(cfg, out_dir=out) == 0
    summary = json.loads((out / "verify" / "summary.json").read_text())
    assert set(summary) == {"gradient", "duality", "lipschitz", "mass"}
    assert all(entry["passed"] for entry in summary.values())
