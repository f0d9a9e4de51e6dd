import csv
import json

import numpy as np
import pytest

from levystop.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_VERIFY, main, y_grid_values

CL = {"family": "CramerLundbergExp", "c": 0.5, "mu": 1.0, "eta": 1.0}
JD = {"family": "JumpDiffusionExp", "sigma": 1.0, "c": 0.5, "mu": 1.0, "eta": 1.0}


def _write(tmp_path, data, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_solve_barrier(tmp_path, capsys):
    cfg = _write(tmp_path, {"command": "solve", "model": CL, "b": 5})
    assert main(["--config", cfg]) == EXIT_OK
    out = capsys.readouterr().out.strip()
    assert out.startswith("case=Barrier")
    a_star = float(out.split("a*=")[1].split()[0])
    assert abs(a_star - 3.995) <= 0.005


def test_solve_stop_immediately(tmp_path, capsys):
    cfg = _write(tmp_path, {"command": "solve", "model": CL, "b": 5})
    assert main(["--config", cfg, "--b", "1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "case=StopImmediately b*=1.5 " in out
    assert "V(0)=1" in out


def test_solve_writes_json(tmp_path, capsys):
    out = tmp_path / "sol.json"
    cfg = _write(tmp_path, {"command": "solve", "model": JD, "b": 5, "output_path": str(out)})
    assert main(["--config", cfg]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["case"] == "Barrier"
    assert abs(data["a_star"] - 4.38) <= 0.01


def test_curves_csv(tmp_path):
    out = tmp_path / "curves.csv"
    cfg = _write(tmp_path, {
        "command": "curves", "model": JD, "b": 5, "a_list": [3, 4.3779353894756365, 5],
        "y_grid": [0, 6, 0.5], "output_path": str(out),
    })
    assert main(["--config", cfg]) == EXIT_OK
    raw = out.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["y", "H", "f_a=3", "f_a=4.37793538948", "f_a=5", "V"]
    body = np.array(rows[1:], dtype=float)
    assert body.shape == (13, 6)
    np.testing.assert_allclose(body[:, 5], body[:, 3], rtol=1e-10)
    assert all(v == format(float(v), ".12g") for v in rows[2])


def test_curves_json_and_byte_identical(tmp_path):
    data = {"command": "curves", "model": CL, "b": 5, "a_list": [2, 5], "format": "json"}
    outs = []
    for i in range(2):
        out = tmp_path / f"c{i}.json"
        assert main(["--config", _write(tmp_path, data), "--out", str(out)]) == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    parsed = json.loads(outs[0])
    assert parsed["columns"][-1] == "V"


def test_simulate_byte_identical(tmp_path):
    data = {"command": "simulate", "model": CL, "b": 5, "a_list": [2.0], "sim": {"n_paths": 3000, "seed": 11}}
    outs = []
    for i in range(2):
        out = tmp_path / f"s{i}.json"
        assert main(["--config", _write(tmp_path, data), "--out", str(out)]) == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    records = json.loads(outs[0])
    assert [r["op"] for r in records] == [
        "simulate_reflected_stop", "simulate_prediction_error", "simulate_ultimate_supremum",
    ]
    for r in records:
        assert set(r) >= {"op", "model", "params", "mean", "std_error", "n_paths", "seed", "bias_bound", "closed_form"}
        assert r["n_paths"] == 3000 and r["seed"] == 11


def test_simulate_per_path_csv(tmp_path):
    per_path = tmp_path / "paths.csv"
    data = {"command": "simulate", "model": CL, "b": 5, "sim": {"n_paths": 50},
            "per_path_csv": str(per_path), "output_path": str(tmp_path / "r.json")}
    assert main(["--config", _write(tmp_path, data)]) == EXIT_OK
    rows = list(csv.reader(per_path.open()))
    assert rows[0] == ["path", "y_tau", "H"]
    assert len(rows) == 51


def test_verify_pass(tmp_path, capsys):
    cfg = _write(tmp_path, {"command": "verify", "model": CL, "b": 5, "sim": {"n_paths": 20000}})
    assert main(["--config", cfg]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[-1] == "VERIFY PASS"
    assert all(line.startswith("PASS") for line in lines[:-1])


def test_validate(tmp_path, capsys):
    assert main(["--config", _write(tmp_path, {"command": "validate", "model": CL})]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] and report["phi0"] == pytest.approx(1.0)
    bad = dict(CL, c=2.0)
    assert main(["--config", _write(tmp_path, {"command": "validate", "model": bad})]) == EXIT_VERIFY


@pytest.mark.parametrize("data", [
    {"command": "solve", "model": CL},
    {"command": "curves", "model": CL, "b": 5},
    {"command": "curves", "model": CL, "b": 5, "a_list": [2], "y_grid": [0, 1, 0]},
    {"command": "dance", "model": CL, "b": 5},
    {"command": "solve", "b": 5},
    {"command": "solve", "model": dict(CL, sigma=1.0), "b": 5},
    {"command": "solve", "model": dict(CL, c=2.0), "b": 5},
    {"command": "solve", "model": CL, "b": -1},
    {"command": "solve", "model": CL, "b": 5, "colour": "red"},
    {"command": "simulate", "model": CL, "b": 5, "sim": {"stop_level": 3}},
])
def test_config_errors(tmp_path, data):
    assert main(["--config", _write(tmp_path, data)]) == EXIT_CONFIG


def test_unreadable_config(tmp_path):
    assert main(["--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["--config", str(p)]) == EXIT_CONFIG


def test_numeric_failure_leaves_no_output(tmp_path):
    out = tmp_path / "result.json"
    out.write_text("previous")
    data = {"command": "simulate", "model": CL, "b": 5, "a_list": [3.0],
            "sim": {"n_paths": 100, "max_events": 2}, "output_path": str(out)}
    assert main(["--config", _write(tmp_path, data)]) == EXIT_NUMERIC
    assert out.read_text() == "previous"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["result.json", "run.json"]


def test_y_grid_values():
    np.testing.assert_allclose(y_grid_values((0.0, 1.0, 0.25)), [0, 0.25, 0.5, 0.75, 1.0])
    assert y_grid_values((0.0, 8.0, 0.05)).size == 161
