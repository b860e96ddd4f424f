import json
import subprocess
import sys

import numpy as np
import pytest

from builders import toy_config
from countsynth.abstraction import Abstraction
from countsynth.cli import (build_instances, load_config, main, normalize, prepare, read_solutions, simulate,
                            synthesize)
from countsynth.errors import ConfigError
from countsynth.solver import read_mps, solve_highs, write_solution
from countsynth.synthesis import check_solution

CSVS = ("plan.csv", "counts.csv", "density.csv", "deviations.csv")


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


# ---------------------------------------------------------------- abstract

def test_abstract_numerical_preset(tmp_path, capsys):
    assert main(["abstract", "--preset", "numerical", "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "numerical: 4941 states" in out and "epsilon*=0.0983107" in out
    ab = Abstraction.from_json((tmp_path / "abstraction.json").read_text())
    assert ab.n_states == 4941 and ab.n_modes == 2


def test_abstract_wide_cells_give_one_state(tmp_path, capsys):
    cfg = toy_config(**{"abstraction": {"eta": 2.0, "tau": 0.2}})
    assert main(["abstract", write(tmp_path, cfg), "--out-dir", str(tmp_path)]) == 0
    assert "toy: 1 states" in capsys.readouterr().out


def test_abstract_rejects_non_contracting_certificate(tmp_path, capsys):
    cfg = toy_config()
    for m in cfg["model"]["modes"]:
        m.update(M=1.5, **{"lambda": 0.1})
    assert main(["abstract", write(tmp_path, cfg), "--out-dir", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_entry_point_runs_as_module(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "countsynth", "abstract", write(tmp_path, toy_config()),
                           "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0 and "21 states" in proc.stdout


# ---------------------------------------------------------------- config errors

def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config()
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, toy_config()), "numerical")
    with pytest.raises(ConfigError):
        load_config(preset_name="nope")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    cfg = toy_config()
    del cfg["synthesis"]["T"]
    with pytest.raises(ConfigError):
        normalize(cfg)
    with pytest.raises(ConfigError):
        normalize({"synthesis": {"T": 1}, "classes": [{"name": "x"}]})


def test_config_error_exit_codes(tmp_path):
    assert main(["synthesize", "--out-dir", str(tmp_path)]) == 2
    too_small = toy_config(**{"abstraction": {"eta": 0.05, "tau": 0.2, "epsilon": 0.05}})
    assert main(["synthesize", write(tmp_path, too_small), "--out-dir", str(tmp_path)]) == 2
    bad_mode = toy_config(constraints=[{"name": "m", "modes": ["zzz"], "R": 1}])
    assert main(["synthesize", write(tmp_path, bad_mode), "--out-dir", str(tmp_path)]) == 2


# ---------------------------------------------------------------- synthesize

def test_zero_bounds_everywhere_fail(tmp_path, capsys):
    cfg = toy_config(constraints=[{"name": "a", "modes": ["a"], "R": 0}, {"name": "b", "modes": ["b"], "R": 0}])
    assert main(["synthesize", write(tmp_path, cfg), "--out-dir", str(tmp_path)]) == 1
    assert "no discrete solution" in capsys.readouterr().out


def test_synthesize_writes_checked_solution(tmp_path):
    cfg = write(tmp_path, toy_config())
    assert main(["synthesize", cfg, "--out-dir", str(tmp_path)]) == 0
    [written] = read_solutions((tmp_path / "solution.json").read_text())
    scn = prepare(load_config(cfg))
    insts, _, S = build_instances(scn)
    assert S == 1 and written.T == 4
    assert np.array_equal(written.w0, insts[0].w0)
    assert check_solution(insts[0], written) == []


def test_horizon_flag_overrides_T(tmp_path):
    cfg = write(tmp_path, toy_config())
    assert main(["synthesize", cfg, "--horizon", "2", "--out-dir", str(tmp_path)]) == 0
    [written] = read_solutions((tmp_path / "solution.json").read_text())
    assert written.T == 2


def test_mps_export_and_external_point(tmp_path, capsys):
    cfg = write(tmp_path, toy_config())
    assert main(["synthesize", cfg, "--solver", "mps", "--out-dir", str(tmp_path)]) == 0
    assert "model.mps" in capsys.readouterr().out
    lp = read_mps(tmp_path / "model.mps")
    res = solve_highs(lp)
    assert res.feasible
    point = write_solution(lp, res.x, tmp_path / "point.txt")
    assert main(["synthesize", cfg, "--solver", "mps", "--solution-in", str(point),
                 "--out-dir", str(tmp_path)]) == 0
    assert "solution" in capsys.readouterr().out
    assert (tmp_path / "solution.json").exists()


def test_tcl_preset_has_no_discrete_solution(tmp_path, capsys):
    with pytest.warns(UserWarning, match="cycle sampling"):
        code = main(["synthesize", "--preset", "tcl", "--out-dir", str(tmp_path)])
    assert code == 1
    assert "no discrete solution" in capsys.readouterr().out


# ---------------------------------------------------------------- simulate

def test_simulate_end_to_end(tmp_path, capsys):
    cfg = write(tmp_path, toy_config())
    assert main(["simulate", cfg, "--out-dir", str(tmp_path / "a")]) == 0
    out = capsys.readouterr().out
    assert "satisfies every counting constraint" in out
    for name in CSVS + ("solution.json",):
        assert (tmp_path / "a" / name).exists()
    assert main(["simulate", cfg, "--out-dir", str(tmp_path / "b")]) == 0
    for name in CSVS:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_uses_given_solution(tmp_path):
    cfg = write(tmp_path, toy_config())
    assert main(["synthesize", cfg, "--out-dir", str(tmp_path / "s")]) == 0
    sol = tmp_path / "s" / "solution.json"
    assert main(["simulate", cfg, "--solution", str(sol), "--horizon", "12",
                 "--out-dir", str(tmp_path / "r")]) == 0
    rows = (tmp_path / "r" / "deviations.csv").read_text().splitlines()
    assert len(rows) == 1 + 13


def test_simulation_result_api(tmp_path):
    scn = prepare(load_config(write(tmp_path, toy_config())))
    result = synthesize(scn, "internal")
    sim = simulate(scn, result.solutions, 20)
    assert sim.ok and sim.discrete_ok and sim.continuous_ok
    assert np.all(sim.density.sum(axis=1) == 10)
    assert sim.deviation.max() <= sim.epsilon


def test_seed_changes_initial_fleet(tmp_path):
    cfg = load_config(write(tmp_path, toy_config()))
    a, b = prepare(cfg, 1), prepare(cfg, 2)
    assert not np.array_equal(a.classes[0].x0, b.classes[0].x0)
    assert np.array_equal(prepare(cfg, 1).classes[0].x0, a.classes[0].x0)
