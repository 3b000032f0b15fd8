import csv
import json

import numpy as np
import pytest

from windwave_id import cli
from windwave_id import metrics as mt
from windwave_id.hydroforces import KernelRealization, save_kernel_csv


@pytest.fixture
def short(tmp_path):
    p = tmp_path / "short.json"
    p.write_text(json.dumps({"simulation": {"duration": 20.0}}))
    return str(p)


def run(*argv):
    return cli.main([str(a) for a in argv])


def simulated(tmp_path, short, name="case1", seed=4):
    out = tmp_path / f"{name}.csv"
    assert run("simulate", name, "--config", short, "--seed", seed, "--out", out) == 0
    return out


def test_simulate_deterministic(tmp_path, short):
    a = simulated(tmp_path / "a", short)
    b = simulated(tmp_path / "b", short)
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".json").read_bytes() == b.with_suffix(".json").read_bytes()


def test_simulate_scenario1_metadata(tmp_path, short, capsys):
    out = simulated(tmp_path, short, "scenario1")
    meta = json.loads(out.with_suffix(".json").read_text())
    assert (meta["Hs"], meta["Tp"], meta["wind_speed"]) == (2.0, 11.0, 5.0)
    assert meta["heading"] == 60.0
    assert "2001 samples" in capsys.readouterr().out


def test_unknown_scenario(tmp_path, capsys):
    assert run("simulate", "case9", "--out", tmp_path / "x.csv") == 1
    err = capsys.readouterr().err
    assert "case9" in err and "case1" in err
    assert not (tmp_path / "x.csv").exists()


def test_estimate_and_evaluate(tmp_path, short, capsys):
    ds = simulated(tmp_path, short)
    est = tmp_path / "est"
    assert run("estimate", ds, "--out", est) == 0
    assert "final relative error" in capsys.readouterr().out
    assert (est / "theta.json").is_file() and (est / "convergence.csv").is_file()
    ev = tmp_path / "ev"
    assert run("evaluate", est / "theta.json", ds, "--out", ev) == 0
    rows = mt.read_report(ev / "report.csv")
    assert [r["mode"] for r in rows] == list(mt.MODES)
    assert sorted(p.name for p in ev.glob("*.svg")) == sorted(f"comparison_{m}.svg" for m in mt.MODES)


def test_gradient_estimator(tmp_path, short):
    ds = simulated(tmp_path, short)
    out = tmp_path / "g"
    assert run("estimate", ds, "--estimator", "gradient", "--out", out) == 0
    theta = json.loads((out / "theta.json").read_text())
    assert theta["metadata"]["method"] == "gradient"
    header = (out / "convergence.csv").read_text().splitlines()[0]
    assert header == "t,prediction_error,frobenius_error"


def test_missing_dataset(tmp_path, capsys):
    assert run("estimate", tmp_path / "none.csv", "--out", tmp_path / "o") == 1
    assert "not found" in capsys.readouterr().err


def test_evaluate_rejects_grid_mismatch(tmp_path, short, capsys):
    ds = simulated(tmp_path, short)
    assert run("estimate", ds, "--out", tmp_path / "est") == 0
    theta = tmp_path / "est" / "theta.json"
    doc = json.loads(theta.read_text())
    doc["metadata"]["dt"] = 0.02
    theta.write_text(json.dumps(doc))
    assert run("evaluate", theta, ds, "--out", tmp_path / "ev") == 1
    assert "dt" in capsys.readouterr().err


def test_overwrite_guard(tmp_path, short, capsys):
    out = simulated(tmp_path, short)
    assert run("simulate", "case1", "--config", short, "--out", out) == 1
    assert "--force" in capsys.readouterr().err
    assert run("simulate", "case1", "--config", short, "--seed", 5, "--out", out, "--force") == 0


def test_sweep_empty_scenarios(tmp_path, capsys):
    assert run("sweep", "--scenarios", "--out", tmp_path / "s") == 1
    assert "at least one scenario" in capsys.readouterr().err


def test_sweep_matches_single_evaluation(tmp_path, short):
    ds = simulated(tmp_path, short, seed=9)
    assert run("estimate", ds, "--out", tmp_path / "est") == 0
    assert run("evaluate", tmp_path / "est" / "theta.json", ds, "--out", tmp_path / "ev",
               "--no-plots") == 0
    report = {r["mode"]: r for r in mt.read_report(tmp_path / "ev" / "report.csv")}
    sw = tmp_path / "sw"
    assert run("sweep", "--scenarios", "case1", "--config", short, "--seed", 9, "--out", sw) == 0
    with open(sw / "summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["mode"] for r in rows] == ["surge", "pitch", "heave"]
    for r in rows:
        assert r["status"] == "ok" and r["heading"] == "30.0"
        assert float(r["mape"]) == float(report[r["mode"]]["mape"])
        assert float(r["r_square"]) == float(report[r["mode"]]["r_square"])
    assert (sw / "case1_h30_report.csv").is_file()


def test_fit_radiation(tmp_path):
    t = np.arange(0.0, 20.0, 0.01)
    kr = KernelRealization(np.array([[0.0, 1.0], [-4.0, -0.8]]), np.array([0.0, 1.0]),
                           np.array([1.0, 0.0]))
    src = tmp_path / "k.csv"
    save_kernel_csv(src, t, {(0, 0): kr.impulse_response(t), (2, 2): np.exp(-t) * np.cos(2 * t)})
    out = tmp_path / "fit.json"
    assert run("fit-radiation", src, "--order", 4, "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "windwave_id.radiation_fit/1"
    assert [(f["i"], f["k"]) for f in doc["kernels"]] == [(1, 1), (3, 3)]
    assert all(f["relative_residual"] < 1e-2 for f in doc["kernels"])
    A = np.array(doc["kernels"][1]["A"])
    assert np.all(np.linalg.eigvals(A).real < 0)
