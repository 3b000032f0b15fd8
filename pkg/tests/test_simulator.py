import math

import numpy as np
import pytest

from windwave_id import config as cf
from windwave_id import model as mc
from windwave_id import simulator as sim
from windwave_id.errors import DivergenceError, IngestionError, ParameterError


def short_cfg(name="case3", duration=10.0, **scenario):
    over = {"simulation": {"duration": duration}}
    if scenario:
        over["scenario"] = scenario
    return cf.load_config(name, overrides=over)


def truth(cfg, seed=None):
    return sim.run_truth(cf.build_plant(cfg), cf.build_scenario(cfg), cf.build_simulation(cfg, seed))


def test_rk4_constant():
    t, X = sim.integrate_rk4(lambda t, x: np.zeros_like(x), np.arange(3.0), 0.1, 1.0)
    assert X.shape == (11, 3)
    np.testing.assert_array_equal(X, np.tile(np.arange(3.0), (11, 1)))


def test_rk4_exponential():
    t, X = sim.integrate_rk4(lambda t, x: -x, np.array([1.0]), 0.01, 1.0)
    assert t[-1] == pytest.approx(1.0)
    assert abs(X[-1, 0] - math.exp(-1.0)) < 1e-8


def test_rk4_oscillator_drift():
    f = lambda t, x: np.array([x[1], -x[0]])
    _, X = sim.integrate_rk4(f, np.array([1.0, 0.0]), 0.01, 200.0)
    amp = np.hypot(X[:, 0], X[:, 1])
    assert np.max(np.abs(amp - 1.0)) < 1e-3


def test_rk4_divergence_reports_time():
    with pytest.raises(DivergenceError) as info:
        sim.integrate_rk4(lambda t, x: 5 * x, np.array([1.0]), 0.01, 10.0, limit=1e3)
    assert 1.0 < info.value.time < 1.6
    t_part, X_part = info.value.partial
    assert np.all(np.abs(X_part) <= 1e3)


def test_step_count_validation():
    assert sim.step_count(0.01, 200.0) == 20000
    with pytest.raises(ParameterError):
        sim.step_count(0.01, 0.015)
    with pytest.raises(ParameterError):
        sim.step_count(0.0, 1.0)


def test_equilibrium_is_fixed_point():
    cfg = short_cfg(duration=20.0, wind={"mean_speed": 0.0, "mode": "steady"},
                    waves={"type": "none"})
    ds = truth(cfg)
    x0 = np.asarray(cfg["simulation"]["initial_state"], float)
    assert np.max(np.abs(ds.X - x0)) < 1e-8


def test_forces_compose_into_input(case3):
    _, _, ds = case3
    total = sum(ds.channels[c] for c in sim.CHANNELS)
    np.testing.assert_allclose(ds.forces, total, rtol=1e-12, atol=1e-9 * np.abs(total).max())
    np.testing.assert_array_equal(ds.U[:, 0::2], 0.0)


def test_excitation_doubles_with_amplitude():
    a = truth(short_cfg("scenario1", duration=5.0))
    b = truth(short_cfg("scenario1", duration=5.0, waves={"Hs": 4.0}))
    np.testing.assert_allclose(b.channels["exc"], 2.0 * a.channels["exc"], rtol=1e-13, atol=1e-6)


def test_scenario1_periodic_response(scenario1):
    _, _, ds = scenario1
    sel = ds.t >= ds.t[-1] - 110.0
    for j in (2, 4):          # pitch and heave displacement
        x = ds.X[sel, j] - ds.X[sel, j].mean()
        spec = np.abs(np.fft.rfft(x))
        freqs = np.fft.rfftfreq(x.size, ds.dt)
        peak = freqs[1 + np.argmax(spec[1:])]
        assert peak == pytest.approx(1.0 / 11.0, abs=freqs[1])


def test_linear_truth_residual(multisine):
    _, plant, ds = multisine
    resid, norm = sim.lumped_residual(plant, ds)
    assert resid <= 1e-6 * norm


def test_determinism_and_seed():
    cfg = short_cfg(duration=5.0)
    a, b = truth(cfg, seed=7), truth(cfg, seed=7)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.U, b.U)
    assert a.metadata == b.metadata
    c = truth(cfg, seed=8)
    assert not np.array_equal(a.X, c.X)


def test_grid_integrity(case3):
    _, _, ds = case3
    assert ds.n == 20001
    np.testing.assert_allclose(np.diff(ds.t), 0.01, rtol=1e-9)
    assert ds.metadata["n_samples"] == ds.n


def test_resimulate_truth_round_trip(multisine):
    _, _, ds = multisine
    Xr = sim.resimulate(ds.theta_true, ds.U, ds.X[0], ds.dt, hold="linear")
    scale = np.abs(ds.X - ds.X.mean(axis=0)).max(axis=0)
    rel = np.max(np.abs(Xr - ds.X), axis=0) / scale
    assert np.all(rel[:6] < 1e-5)
    # the stiff PTO feedback inside U varies within a step on the WEC rows
    assert np.all(rel[6:] < 1e-2)


def test_resimulate_homogeneous_offset():
    cfg = cf.load_config("case3")
    th = cf.build_plant(cfg).theta_true()
    n = 30001
    Xr = sim.resimulate(th, np.zeros((n, 12)), np.zeros(12), 0.01)
    # heave settles where stiffness balances the constant term
    h = th.named()
    np.testing.assert_allclose(Xr[-1, 4], h["h4"] / h["h1"], rtol=1e-3)
    assert np.max(np.abs(Xr[-1, [0, 2, 6, 8, 10]])) < 1e-3 * abs(Xr[-1, 4])


def test_resimulate_diverges_on_unstable_theta():
    th = mc.ThetaMatrix(np.zeros((12, 25)), mc.standard_mask())
    th.values[0, 1] = 1.0
    th.values[1, 0] = 1.0      # q'' = q: a positive real eigenvalue
    x0 = np.zeros(12)
    x0[0] = 1.0
    with pytest.raises(DivergenceError) as info:
        sim.resimulate(th, np.zeros((10001, 12)), x0, 0.01, limit=1e6)
    assert info.value.time < 100.0
    assert info.value.partial.shape[1] == 12


def test_dataset_round_trip(tmp_path, case3):
    _, _, ds = case3
    p = tmp_path / "d.csv"
    sim.export_dataset(ds, p)
    back = sim.import_dataset(p)
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.U, ds.U)
    for c in sim.CHANNELS:
        np.testing.assert_array_equal(back.channels[c], ds.channels[c])
    assert back.metadata == ds.metadata
    np.testing.assert_array_equal(back.theta_true.values, ds.theta_true.values)


def _write(path, cols, rows):
    path.write_text(",".join(cols) + "\n" + "\n".join(",".join(str(v) for v in r) for r in rows) + "\n")


def test_import_hand_built_file(tmp_path):
    cols = sim.dataset_columns()
    rows = []
    for k in range(3):
        r = [0.0] * len(cols)
        r[0] = 0.5 * k
        r[cols.index("x1")] = 10.0 + k
        r[cols.index("u2")] = -3.0 * k
        r[cols.index("exc_3")] = 7.0
        rows.append(r)
    p = tmp_path / "h.csv"
    _write(p, cols, rows)
    ds = sim.import_dataset(p)
    assert ds.dt == 0.5
    np.testing.assert_array_equal(ds.X[:, 0], [10.0, 11.0, 12.0])
    np.testing.assert_array_equal(ds.U[:, 1], [0.0, -3.0, -6.0])
    np.testing.assert_array_equal(ds.channels["exc"][:, 2], 7.0)
    assert ds.metadata == {}


def test_import_errors(tmp_path):
    cols = sim.dataset_columns()
    good = [[0.1 * k] + [0.0] * (len(cols) - 1) for k in range(3)]
    with pytest.raises(IngestionError, match="not found"):
        sim.import_dataset(tmp_path / "none.csv")
    p = tmp_path / "a.csv"
    drop = cols.index("moor_4")
    _write(p, cols[:drop] + cols[drop + 1:], [r[:drop] + r[drop + 1:] for r in good])
    with pytest.raises(IngestionError, match="moor_4"):
        sim.import_dataset(p)
    bad = [list(r) for r in good]
    bad[1][cols.index("x5")] = "nan"
    _write(p, cols, bad)
    with pytest.raises(IngestionError, match="row 3, column x5"):
        sim.import_dataset(p)
    skew = [list(r) for r in good]
    skew[2][0] = 0.5
    _write(p, cols, skew)
    with pytest.raises(IngestionError, match="non-uniform"):
        sim.import_dataset(p)
