import json
import math

import pytest

GAUSS = {"model": {"name": "tanh"}, "epsilon": [0.2], "packet": {"eta": 1.0}}


def test_missing_model_name_is_a_config_error(run_cli):
    proc, _ = run_cli("predict", {"model": {"params": {}}})
    assert proc.returncode == 1
    assert "ConfigError" in proc.stderr


def test_unknown_key_and_missing_file(run_cli, tmp_path):
    proc, _ = run_cli("predict", {"model": {"name": "tanh"}, "colour": "blue"})
    assert proc.returncode == 1
    proc, _ = run_cli("predict", tmp_path / "absent.json")
    assert proc.returncode == 1


def test_predict_report(run_cli, configs):
    proc, out = run_cli("predict", configs / "tanh_gaussian.json", "--seedless")
    assert proc.returncode == 0, proc.stderr
    rep = json.loads((out / "predict.json").read_text())
    res = rep["results"][0]
    assert abs(res["eta_plus"] - 2.05) < 0.03
    assert abs(res["eta_naive"] - 1.9566) < 1e-3
    assert rep["config"]["model"]["name"] == "tanh"
    assert rep["seedless"] is True
    header = (out / "predict.csv").read_text().splitlines()[0]
    assert header.startswith("eps,E_star,k_star,eta_plus,eta_naive")


def test_epsilon_flags_override_config(run_cli, configs):
    proc, out = run_cli("predict", configs / "tanh_gaussian.json", "--epsilon", "0.25", "--epsilon", "0.2")
    assert proc.returncode == 0, proc.stderr
    rep = json.loads((out / "predict.json").read_text())
    assert [r["eps"] for r in rep["results"]] == [0.25, 0.2]
    assert rep["config"]["epsilon"] == [0.25, 0.2]


def test_no_crossing_is_refused(run_cli):
    cfg = {"model": {"name": "lz", "params": {"x_sat": 1.5}, "delta": 0.0}, "packet": {"eta": 1.2}}
    proc, out = run_cli("predict", cfg)
    assert proc.returncode == 4
    assert "NoRootInBox" in proc.stderr


def test_minimum_at_window_edge_exits_2(run_cli):
    # E0 = 1.207 sits inside the window but the minimiser E* = 1.4 does not
    cfg = dict(GAUSS, predict={"window": [0.75, 1.3], "clip_tolerance": 1})
    proc, _ = run_cli("predict", cfg)
    assert proc.returncode == 2, proc.stderr
    assert "MinimumAtBoundary" in proc.stderr


def test_report_config_round_trips(run_cli, configs, tmp_path):
    proc, out = run_cli("predict", configs / "tanh_phi3.json")
    assert proc.returncode == 0, proc.stderr
    rep = json.loads((out / "predict.json").read_text())
    again = tmp_path / "again.json"
    again.write_text(json.dumps(rep["config"]))
    proc, out2 = run_cli("predict", again, out=tmp_path / "out2")
    assert proc.returncode == 0, proc.stderr
    rep2 = json.loads((out2 / "predict.json").read_text())
    assert rep2["config"] == rep["config"]
    assert rep2["config_hash"] == rep["config_hash"]
    assert (out / "predict.csv").read_bytes() == (out2 / "predict.csv").read_bytes()


def test_outputs_are_deterministic(run_cli, configs, tmp_path):
    cfg = json.loads((configs / "constant.json").read_text())
    cfg["evolve"].update({"t0": -2, "t1": 0, "x_min": -12, "x_max": 12, "snapshot_times": [-1]})
    runs = [run_cli("evolve", cfg, out=tmp_path / f"run{i}") for i in range(2)]
    for proc, _ in runs:
        assert proc.returncode == 0, proc.stderr
    names = sorted(p.name for p in runs[0][1].iterdir())
    assert "evolve_eps0.2_series.csv" in names
    for name in names:
        assert (runs[0][1] / name).read_bytes() == (runs[1][1] / name).read_bytes(), name


def test_zero_duration_snapshots_equal_initial_state(run_cli, configs):
    cfg = json.loads((configs / "constant.json").read_text())
    cfg["evolve"].update({"t0": 0, "t1": 0, "x_min": -12, "x_max": 12})
    proc, out = run_cli("evolve", cfg)
    assert proc.returncode == 0, proc.stderr
    rep = json.loads((out / "evolve.json").read_text())["results"][0]
    assert rep["steps"] == 0
    upper = rep["snapshots"][0]["levels"][1]
    assert upper["mass"] == pytest.approx(1.0, abs=1e-10)
    assert upper["mean_x"] == pytest.approx(0.0, abs=1e-10)
    assert upper["mean_k"] == pytest.approx(1.0, abs=1e-10)
    rows = (out / "evolve_eps0.2_t0_x.csv").read_text().splitlines()
    x, d1, d2 = zip(*[map(float, r.split(",")) for r in rows[1:]])
    dx = x[1] - x[0]
    i = max(range(len(x)), key=lambda j: d2[j])
    # phi_0 density peak 1 / (sqrt(pi) eps) at the centre
    assert max(d2) == pytest.approx(1 / (math.sqrt(math.pi) * 0.2), rel=1e-3)
    assert abs(x[i]) <= dx
    assert max(d1) < 1e-20


def test_boundary_contamination_exits_3(run_cli, configs):
    cfg = json.loads((configs / "constant.json").read_text())
    cfg["evolve"].update({"t0": -2, "t1": 9, "x_min": -12, "x_max": 12})
    proc, out = run_cli("evolve", cfg)
    assert proc.returncode == 3, proc.stderr
    rep = json.loads((out / "evolve.json").read_text())["results"][0]
    assert rep["partial"] is True


def test_constant_compare_passes_trivially(run_cli, configs):
    cfg = json.loads((configs / "constant.json").read_text())
    cfg["evolve"].update({"t0": -4, "t1": 4, "x_min": -12, "x_max": 12})
    proc, out = run_cli("compare", cfg)
    assert proc.returncode == 0, proc.stderr
    rep = json.loads((out / "compare.json").read_text())
    assert rep["all_pass"] is True


def test_smatrix_table(run_cli, configs):
    proc, out = run_cli("smatrix", configs / "lz_smatrix.json", "--epsilon", "0.2", "--epsilon", "0.15")
    assert proc.returncode == 0, proc.stderr
    lines = (out / "smatrix.csv").read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, map(float, r.split(",")))) for r in lines[1:]]
    assert len(rows) == 6
    for r in rows:
        assert r["symmetry_residual"] < 1e-6
        assert r["flux_defect"] < 1e-8
        assert abs(r["ratio"] - 1) < 0.05
    # full precision in every cell
    assert any(len(c.replace("-", "").replace(".", "").split("e")[0]) >= 16 for c in lines[1].split(","))


def test_contour_dump(run_cli, configs):
    proc, out = run_cli("contour", configs / "tanh_gaussian.json")
    assert proc.returncode == 0, proc.stderr
    rep = json.loads((out / "contour.json").read_text())
    assert rep["config"]["model"]["name"] == "tanh"
    assert len((out / "contour.csv").read_text().splitlines()) > 10
