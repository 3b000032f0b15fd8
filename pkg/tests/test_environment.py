import math

import numpy as np
import pytest
from scipy import integrate

from windwave_id import environment as env
from windwave_id.errors import DomainError, IngestionError, InterpolationRangeError, ParameterError

CASES = [(2.1, 9.74), (2.88, 9.98), (3.62, 10.29), (4.44, 10.66), (5.32, 11.06), (6.02, 11.38)]


def unit_table(n=6):
    w = np.linspace(0.05, 4.0, 50)
    return env.ExcitationCoeffTable(w, np.ones((50, n)), np.zeros((50, n)))


def test_zero_hs_zero_spectrum():
    spec = env.JonswapSpec(Hs=0.0, Tp=10.0)
    np.testing.assert_array_equal(env.jonswap_spectrum(np.linspace(0.1, 3, 50), spec), 0.0)


def test_spectrum_peak_location():
    spec = env.JonswapSpec(Hs=3.0, Tp=10.0)
    w = np.linspace(0.2, 2.0, 20001)
    S = env.jonswap_spectrum(w, spec)
    assert abs(w[np.argmax(S)] - 2 * math.pi / 10.0) <= w[1] - w[0]


@pytest.mark.parametrize("Hs,Tp", CASES)
def test_spectrum_energy_quadrature(Hs, Tp):
    spec = env.JonswapSpec(Hs=Hs, Tp=Tp)
    m0, _ = integrate.quad(lambda w: float(env.jonswap_spectrum(w, spec)), 0.05, 30.0,
                           limit=400, points=[2 * math.pi / Tp])
    assert 4 * math.sqrt(m0) == pytest.approx(Hs, rel=0.02)


def test_spectrum_rejects_nonpositive_frequency():
    with pytest.raises(DomainError):
        env.jonswap_spectrum(np.array([0.0, 1.0]), env.JonswapSpec(Hs=1.0, Tp=10.0))


def test_spec_validation():
    with pytest.raises(ParameterError):
        env.JonswapSpec(Hs=-1.0, Tp=10.0)
    with pytest.raises(ParameterError):
        env.JonswapSpec(Hs=1.0, Tp=10.0, gamma=0.5)
    with pytest.raises(ParameterError):
        env.RegularWaveSpec(Tp=10.0)


def test_regular_wave_component():
    c = env.synthesize_waves(env.RegularWaveSpec(Tp=11.0, Hs=2.0))
    assert len(c) == 1
    assert c.amplitude[0] == 1.0
    assert c.omega[0] == pytest.approx(0.5712, abs=1e-4)


def test_synthesis_deterministic():
    spec = env.JonswapSpec(Hs=3.62, Tp=10.29, seed=5)
    a, b = env.synthesize_waves(spec), env.synthesize_waves(spec)
    np.testing.assert_array_equal(a.phase, b.phase)
    np.testing.assert_array_equal(a.amplitude, b.amplitude)
    c = env.synthesize_waves(env.JonswapSpec(Hs=3.62, Tp=10.29, seed=6))
    assert not np.array_equal(a.phase, c.phase)


def test_elevation_variance_matches_m0():
    spec = env.JonswapSpec(Hs=3.62, Tp=10.29, seed=3)
    comps = env.synthesize_waves(spec)
    t = np.arange(0.0, 600.0, 0.05)
    eta = comps.elevation(t)
    m0 = (spec.Hs / 4.0) ** 2
    assert np.var(eta) == pytest.approx(m0, rel=0.05)


def test_zero_amplitude_no_force():
    comps = env.WaveComponentSet(np.zeros(3), [0.5, 0.7, 1.0], [0.1, 0.2, 0.3])
    np.testing.assert_array_equal(env.excitation_forces(comps, unit_table(), np.linspace(0, 50, 99)), 0.0)


def test_unit_component_force():
    comps = env.WaveComponentSet([1.0], [0.8], [0.0])
    assert env.excitation_force(comps, unit_table(), 2, 0.0) == pytest.approx(1.0)


def test_force_superposition():
    rng = np.random.default_rng(0)
    table = env.ExcitationCoeffTable.synthetic([1e6, 2e7, 3e6, 1e5, 1e5, 1e5], [1.0] * 6,
                                               [0.1] * 6, [0.3] * 6)
    c1 = env.WaveComponentSet([0.7], [0.6], [0.3])
    c2 = env.WaveComponentSet([0.4], [1.1], [2.0])
    both = env.WaveComponentSet([0.7, 0.4], [0.6, 1.1], [0.3, 2.0])
    t = rng.uniform(0, 200, 100)
    np.testing.assert_allclose(env.excitation_forces(both, table, t),
                               env.excitation_forces(c1, table, t) + env.excitation_forces(c2, table, t),
                               rtol=1e-12, atol=1e-6)
    for dof in range(6):
        np.testing.assert_allclose(env.excitation_force(both, table, dof, t),
                                   env.excitation_forces(both, table, t)[:, dof], rtol=1e-10, atol=1e-6)


def test_force_linear_in_amplitude():
    comps = env.synthesize_waves(env.JonswapSpec(Hs=2.0, Tp=10.0, seed=1))
    table = env.ExcitationCoeffTable.synthetic([1.0] * 6, [1.0] * 6, [0.0] * 6, [0.2] * 6)
    t = np.linspace(0, 100, 500)
    np.testing.assert_allclose(env.excitation_forces(comps.scaled(3.0), table, t),
                               3.0 * env.excitation_forces(comps, table, t), rtol=1e-12, atol=1e-12)


def test_table_range_checked():
    comps = env.WaveComponentSet([1.0], [5.0], [0.0])
    with pytest.raises(InterpolationRangeError):
        env.excitation_forces(comps, unit_table(), [0.0])


def test_table_csv_round_trip(tmp_path):
    table = env.ExcitationCoeffTable.synthetic([1e6, 2e7, 3e6, 1e5, 1e5, 1e5], [1.0] * 6,
                                               [0.1] * 6, [0.3] * 6)
    p = tmp_path / "exc.csv"
    table.to_csv(p)
    back = env.ExcitationCoeffTable.from_csv(p)
    np.testing.assert_array_equal(back.magnitude, table.magnitude)
    np.testing.assert_array_equal(back.phase, table.phase)
    p.write_text("omega,f_mag_1\n0.1,1\n")
    with pytest.raises(IngestionError):
        env.ExcitationCoeffTable.from_csv(p)


def test_heading_projection():
    table = unit_table()
    head = table.for_heading(60.0, wec_headings_deg=[120.0, 240.0, 0.0])
    np.testing.assert_allclose(head.magnitude[0], [0.5, 0.5, 1.0, 0.5, 1.0, 0.5], atol=1e-12)
    # cos(60 - 240) < 0 flips the phase of WEC 2
    assert head.phase[0, 4] == pytest.approx(math.pi)
    np.testing.assert_array_equal(table.for_heading(0.0).magnitude, table.magnitude)


def test_steady_wind():
    spec = env.WindSpec(mean_speed=5.0)
    np.testing.assert_array_equal(env.wind_speed(spec, np.linspace(0, 100, 11)), 5.0)


def test_zero_intensity_turbulent_is_constant():
    spec = env.WindSpec(mean_speed=8.0, turbulence_intensity=0.0, mode="turbulent")
    np.testing.assert_array_equal(env.wind_speed(spec, np.linspace(0, 100, 11)), 8.0)


def test_turbulent_wind_moments():
    spec = env.WindSpec(mean_speed=11.4, turbulence_intensity=0.138, mode="turbulent", seed=3)
    v = env.WindField(spec, 3600.0).v
    assert v.mean() == pytest.approx(11.4, rel=0.02)
    assert v.std() == pytest.approx(11.4 * 0.138, rel=0.10)
    dev = v - 11.4
    assert np.mean(dev * dev) == pytest.approx((11.4 * 0.138) ** 2, rel=0.10)


def test_wind_deterministic_and_prefix():
    spec = env.WindSpec(mean_speed=10.0, turbulence_intensity=0.1, mode="turbulent", seed=9)
    a = env.WindField(spec, 100.0)
    b = env.WindField(spec, 200.0)
    np.testing.assert_array_equal(a.v, b.v[:a.v.size])
    t = np.linspace(0, 100, 777)
    np.testing.assert_array_equal(a(t), env.WindField(spec, 100.0)(t))


def test_aero_force():
    drag = env.AeroDrag(Cd=0.8, area=100.0, air_density=1.225, hub_height=90.0)
    f, m = env.aero_force(10.0, np.zeros(12), drag)
    assert f == pytest.approx(4900.0)
    assert m == pytest.approx(4900.0 * 90.0)
    assert env.aero_force(0.0, np.zeros(12), drag)[0] == 0.0
    x = np.zeros(12)
    x[1] = 3.0
    assert env.aero_force(1.0, x, drag)[0] < 0.0


def test_aero_linearization_is_tangent():
    drag = env.AeroDrag()
    x = np.zeros(12)
    f_ref = env.aero_force(9.0, x, drag)[0]
    assert env.aero_force_linear(9.0, x, drag, v_ref=9.0)[0] == pytest.approx(f_ref)
    h = 1e-3
    slope = (env.aero_force(9.0 + h, x, drag)[0] - env.aero_force(9.0 - h, x, drag)[0]) / (2 * h)
    lin = (env.aero_force_linear(9.0 + h, x, drag, 9.0)[0]
           - env.aero_force_linear(9.0 - h, x, drag, 9.0)[0]) / (2 * h)
    assert lin == pytest.approx(slope, rel=1e-9)
