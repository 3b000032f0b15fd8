import math

import numpy as np
import pytest

from windwave_id import metrics as mt
from windwave_id.errors import DimensionError, MetricError, ParameterError


def sine(n=10000, amp=2.0, periods=25):
    t = np.arange(n) / n
    return amp * np.sin(2 * math.pi * periods * t)


def test_rms_examples():
    assert mt.rms(np.full(50, -3.0)) == pytest.approx(3.0)
    assert mt.rms(sine()) == pytest.approx(2.0 / math.sqrt(2.0), rel=1e-3)
    assert mt.rms([3.0, 4.0]) == pytest.approx(3.5355, rel=1e-4)
    with pytest.raises(DimensionError):
        mt.rms([])


def test_error_stats():
    r = sine()
    assert mt.error_stats(r, r) == (0.0, 0.0)
    mean, std = mt.error_stats(r + 1.0, r)
    assert mean == pytest.approx(1.0)
    assert std == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(0)
    c, ref = rng.normal(size=(2, 777))
    e = c - ref
    m = sum(e) / e.size
    s = math.sqrt(sum((v - m) ** 2 for v in e) / e.size)
    assert mt.error_stats(c, ref) == pytest.approx((m, s), rel=1e-12)
    with pytest.raises(DimensionError):
        mt.error_stats([1.0], [1.0])
    with pytest.raises(DimensionError):
        mt.error_stats([1.0, 2.0], [1.0, 2.0, 3.0])


def test_mape_examples():
    r = 1.0 + sine()
    assert mt.mape(r, r) == 0.0
    assert mt.mape(1.05 * r, r) == pytest.approx(5.0, rel=1e-9)


def test_mape_floor_matches_brute_force():
    r = sine(1001)
    c = r + 0.01 * np.cos(np.arange(r.size))
    floor = 1e-3
    peak = max(abs(v) for v in r)
    terms = [abs(a - b) / abs(b) for a, b in zip(c, r) if abs(b) > floor * peak]
    value, excluded = mt.mape_details(c, r, floor)
    assert value == pytest.approx(100.0 * sum(terms) / len(terms), rel=1e-12)
    assert excluded == pytest.approx(1.0 - len(terms) / r.size)
    assert excluded > 0.0


def test_mape_errors():
    with pytest.raises(MetricError):
        mt.mape(np.ones(10), np.zeros(10))
    with pytest.raises(ParameterError):
        mt.mape(np.ones(10), np.ones(10), floor_ratio=0.0)


def test_r_square():
    r = sine()
    assert mt.r_square(r, r) == 1.0
    assert mt.r_square(np.full_like(r, r.mean()), r) == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(1)
    c = r + 0.3 * rng.normal(size=r.size)
    mean = sum(r) / r.size
    want = 1.0 - sum((a - b) ** 2 for a, b in zip(c, r)) / sum((b - mean) ** 2 for b in r)
    assert mt.r_square(c, r) == pytest.approx(want, rel=1e-10)
    with pytest.raises(MetricError):
        mt.r_square(np.ones(5), np.full(5, 2.0))


def test_invariance_shift_and_scale():
    rng = np.random.default_rng(2)
    r = 1.0 + sine(2000)
    c = r + 0.05 * rng.normal(size=r.size)
    base = (mt.mape(c, r), mt.r_square(c, r), mt.error_stats(c, r))
    rc, rr = np.roll(c, 333), np.roll(r, 333)
    assert mt.mape(rc, rr) == pytest.approx(base[0], rel=1e-12)
    assert mt.r_square(rc, rr) == pytest.approx(base[1], rel=1e-12)
    assert mt.mape(-4.0 * c, -4.0 * r) == pytest.approx(base[0], rel=1e-12)
    assert mt.r_square(-4.0 * c, -4.0 * r) == pytest.approx(base[1], rel=1e-12)
    assert mt.rms(-4.0 * r) == pytest.approx(4.0 * mt.rms(r), rel=1e-12)


def traces(n=500):
    t = np.linspace(0, 50, n)
    off = np.array([0, 0, -10.0, 0, 0, 0])
    ref = np.column_stack([np.sin(t + k) for k in range(6)]) + off
    return off + 1.01 * (ref - off), ref


def test_fidelity_report_offset_and_csv(tmp_path):
    cand, ref = traces()
    off = np.array([0, 0, -10.0, 0, 0, 0])
    rep = mt.fidelity_report("demo", cand, ref, offset=off)
    assert rep.complete and rep.n_samples == 500
    assert set(rep.modes) == set(mt.MODES)
    assert rep.modes["surge"].mape == pytest.approx(1.0, rel=1e-9)
    assert rep.modes["heave"].mape == pytest.approx(1.0, rel=1e-9)
    p = tmp_path / "r.csv"
    rep.to_csv(p)
    rows = mt.read_report(p)
    assert [r["mode"] for r in rows] == list(mt.MODES)
    assert list(rows[0]) == list(mt.REPORT_COLUMNS)
    assert float(rows[1]["r_square"]) == rep.modes["pitch"].r_square
    rep.to_csv(p, append=True)
    assert len(mt.read_report(p)) == 12


def test_fidelity_report_partial_prefix():
    cand, ref = traces()
    rep = mt.fidelity_report("cut", cand[:200], ref)
    assert not rep.complete
    assert rep.n_samples == 200
    full = mt.fidelity_report("cut", cand[:200], ref[:200])
    assert rep.modes["pitch"] == full.modes["pitch"]
    with pytest.raises(DimensionError):
        mt.fidelity_report("bad", cand[:, :3], ref)
