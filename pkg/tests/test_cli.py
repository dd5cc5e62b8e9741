import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from vorwave import __version__
from vorwave.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, load_config, main, run
from vorwave.dispersion import WavePhysics, big_omega_j

MEASURE = {"nonres.ell_max": 3, "nonres.j_cutoff": 10, "nonres.kappa_grid": 201}
SOLVE = {"solver.n_phi": 3, "solver.n_modes": 8, "solve.amplitudes": [1e-3]}


def read_json(path):
    return json.loads(path.read_text())


def rows(path):
    with path.open() as fh:
        return list(csv.DictReader(fh))


def test_dispersion_table_and_manifest(tmp_path):
    code = run("dispersion", overrides={"dispersion.jmax": 16, "physics.gamma": 0.3}, out=tmp_path)
    assert code == EXIT_OK
    tab = rows(tmp_path / "dispersion.csv")
    js = [int(r["j"]) for r in tab]
    assert sum(j > 0 for j in js) == 16 and sum(j < 0 for j in js) == 16
    p = WavePhysics(gamma=0.3)
    for r in tab:
        assert float(r["Omega_j"]) == big_omega_j(p, int(r["j"]))
    man = read_json(tmp_path / "manifest.json")
    assert man["status"] == "ok" and man["exit_code"] == 0 and man["config"]["physics"]["gamma"] == 0.3
    assert set(man["outputs"]) == {"dispersion.csv"} and len(man["inputs_hash"]) == 64
    assert not (tmp_path / "failure.json").exists()


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"physics": {"kappa": 2.0, "depth": 3}, "nonres": {"upsilon": 5e-3}}))
    exp = load_config(cfg, {"nonres.upsilon": 1e-3, "physics.gamma": None})
    assert exp.physics.kappa == 2.0 and exp.nonres.upsilon == 1e-3 and exp.physics.build().depth == 3.0
    assert load_config(None).physics.build().infinite_depth


@pytest.mark.parametrize(
    "config",
    [{"physics": {"kapa": 1.0}}, {"physics": {"kappa": -1.0}}, {"sites": {"splus": [2, 1]}}, {"nonres": {"tau": 0.5}}],
)
def test_config_errors_exit_1(tmp_path, config):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(config))
    code = run("measure", cfg, MEASURE, out=tmp_path / "run")
    assert code == EXIT_CONFIG
    fail = read_json(tmp_path / "run" / "failure.json")
    assert fail["status"] == "config_error" and fail["reason"]
    assert read_json(tmp_path / "run" / "manifest.json")["exit_code"] == EXIT_CONFIG


def test_missing_snapshot_and_bad_json_exit_1(tmp_path):
    assert run("normalform", snapshot=tmp_path / "nope.json", out=tmp_path / "a") == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run("dispersion", bad, out=tmp_path / "b") == EXIT_CONFIG


def test_numerical_failure_exit_2(tmp_path):
    code = run("solve", overrides={**SOLVE, "solve.amplitudes": [0.5]}, out=tmp_path)
    assert code == EXIT_NUMERICAL
    fail = read_json(tmp_path / "failure.json")
    assert fail["status"] == "numerical_failure"


def test_measure_shrinks_with_upsilon_and_is_deterministic(tmp_path):
    totals = []
    for u in (1e-2, 5e-3):
        assert run("measure", overrides={**MEASURE, "nonres.upsilon": u}, out=tmp_path / str(u)) == EXIT_OK
        totals.append(read_json(tmp_path / str(u) / "measure.json")["total"])
    assert totals[0] > totals[1] > 0
    assert run("measure", overrides={**MEASURE, "nonres.upsilon": 5e-3}, out=tmp_path / "again", threads=4) == EXIT_OK
    for name in ("measure.json", "excluded_intervals.csv", "excluded_union.csv"):
        assert (tmp_path / "again" / name).read_bytes() == (tmp_path / "0.005" / name).read_bytes()
    union = rows(tmp_path / "again" / "excluded_union.csv")
    assert sum(float(r["kappa_hi"]) - float(r["kappa_lo"]) for r in union) == pytest.approx(totals[1], rel=1e-12)


def test_transversality_bounds_positive(tmp_path):
    assert run("transversality", overrides=MEASURE, out=tmp_path, threads=2) == EXIT_OK
    out = read_json(tmp_path / "transversality.json")
    assert out["min_bound"] > 0
    assert all(f["bound"] > 0 for f in out["families"].values())


def test_solve_validate_normalform_pipeline(tmp_path):
    assert run("solve", overrides=SOLVE, out=tmp_path / "solve") == EXIT_OK
    ladder = rows(tmp_path / "solve" / "ladder.csv")
    assert len(ladder) == 1 and float(ladder[0]["final_residual"]) < 1e-11
    snap = tmp_path / "solve" / "torus.json"
    ov = {"validate.t_end": None, "validate.periods": 1.0, "validate.samples": 2}
    assert run("validate", overrides=ov, out=tmp_path / "val", snapshot=snap) == EXIT_OK
    assert read_json(tmp_path / "val" / "validation.json")["max_deviation"] < 1e-5
    assert run("normalform", overrides={"normalform.jmax": 8}, out=tmp_path / "nf", snapshot=snap) == EXIT_OK
    nf = read_json(tmp_path / "nf" / "normalform.json")
    assert abs(nf["m32"] - 1) < 1e-4 and len(rows(tmp_path / "nf" / "mu_table.csv")) == 16
    tight = {**ov, "validate.tolerance": 1e-30}
    assert run("validate", overrides=tight, out=tmp_path / "val2", snapshot=snap) == EXIT_NUMERICAL


def test_validate_single_mode_and_linwave(tmp_path):
    ov = {"validate.modes": 8, "validate.periods": 1.0, "validate.steps_per_period": 32}
    assert run("validate", overrides=ov, out=tmp_path / "v") == EXIT_OK
    inv = read_json(tmp_path / "v" / "invariants.json")
    assert inv["momentum_drift"] < 1e-12
    series = rows(tmp_path / "v" / "timeseries.csv")
    assert set(series[0]) == {"t", "hamiltonian", "momentum", "mean_eta"}
    assert run("linwave", overrides={"solver.n_phi": 3, "solver.n_modes": 8}, out=tmp_path / "l") == EXIT_OK
    lw = read_json(tmp_path / "l" / "linwave.json")
    np.testing.assert_allclose(lw["omega"], big_omega_j(WavePhysics(), np.array([1, 2])))


def test_click_wiring(tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, ["--version"])
    assert res.exit_code == 0 and __version__ in res.output
    res = runner.invoke(main, ["dispersion", "--jmax", "4", "--kappa", "2", "--depth", "inf", "--out", str(tmp_path / "d")])
    assert res.exit_code == 0
    assert len(rows(tmp_path / "d" / "dispersion.csv")) == 8
    res = runner.invoke(main, ["dispersion", "--depth", "shallow", "--out", str(tmp_path / "e")])
    assert res.exit_code == EXIT_CONFIG and "config_error" in res.output
    res = runner.invoke(main, ["measure", "--ellmax", "2", "--jcut", "6", "--grid", "101", "--upsilon", "1e-2", "--out", str(tmp_path / "m")],
                        env={"VORWAVE_THREADS": "3"})
    assert res.exit_code == 0 and read_json(tmp_path / "m" / "manifest.json")["threads"] == 3
