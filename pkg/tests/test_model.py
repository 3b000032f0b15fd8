import json

import numpy as np
import pytest

from windwave_id import model as mc
from windwave_id.errors import DimensionError, IngestionError, ParameterError, StructureError


def random_params(rng):
    M = rng.uniform(1e5, 1e7, 6)
    B = np.zeros((6, 6))
    R = np.zeros((6, 6))
    for r, c in mc.COUPLING_PATTERN:
        B[r, c] = rng.uniform(-1e5, 1e5)
        R[r, c] = rng.uniform(-1e5, 1e5)
    return mc.SystemParameters(M=M, B=B, R=R, C3=rng.uniform(-1e6, 1e6))


def direct_rhs(p, X, U):
    """Term-by-term right-hand side of X' built from the physical matrices."""
    q, qd = X[0::2], X[1::2]
    F = U[1::2]
    acc = (F - p.R @ q - p.B @ qd - np.array([0, 0, p.C3, 0, 0, 0])) / p.M
    out = np.empty(12)
    out[0::2] = qd
    out[1::2] = acc
    return out


def test_regressor_zero_state():
    phi = mc.build_regressor(np.zeros(12), np.zeros(12))
    expected = np.zeros(25)
    expected[-1] = 1.0
    np.testing.assert_array_equal(phi, expected)


def test_regressor_unit_surge():
    X = np.zeros(12)
    X[0] = 1.0
    phi = mc.build_regressor(X, np.zeros(12))
    assert phi.shape == (25,)
    assert np.flatnonzero(phi).tolist() == [0, 24]


def test_regressor_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        mc.build_regressor(np.zeros(11), np.zeros(12))


def test_input_vector_layout():
    u = mc.input_vector(np.arange(1.0, 7.0))
    np.testing.assert_array_equal(u[0::2], 0.0)
    np.testing.assert_array_equal(u[1::2], np.arange(1.0, 7.0))


def test_single_coefficient_row():
    named = {n: 0.0 for n in mc.PARAM_NAMES}
    named.update(s3=1.0, p5=1.0, h3=1.0, l7=1.0, j7=1.0, w7=1.0)
    th = mc.assemble_theta(mc.SystemParameters.from_named(named))
    row = th.values[1]
    assert np.flatnonzero(row).tolist() == [mc.LAYOUT.force_col(0)]
    assert row[mc.LAYOUT.force_col(0)] == 1.0


def test_platform_mass_inverse():
    M = np.array([1.1473e7, 1.0, 1.0, 1.0, 1.0, 1.0])
    th = mc.assemble_theta(mc.SystemParameters(M, np.zeros((6, 6)), np.zeros((6, 6))))
    assert th.values[1, 13] == pytest.approx(8.716e-8, rel=1e-4)
    assert th.named()["s3"] == pytest.approx(1 / 1.1473e7, rel=1e-15)


def test_estimated_count_and_layout():
    mask = mc.standard_mask()
    assert np.count_nonzero(mask == mc.ESTIMATED) == 33
    for row in range(0, 12, 2):
        assert np.count_nonzero(mask[row] == mc.FIXED_ONE) == 1
        assert np.count_nonzero(mask[row] == mc.ESTIMATED) == 0
        assert mask[row, row + 1] == mc.FIXED_ONE
    # B block is diagonal on velocity rows only
    Bm = mask[:, 12:24]
    assert {tuple(x) for x in np.argwhere(Bm == mc.ESTIMATED)} == {(r, r) for r in range(1, 12, 2)}
    # the only estimated constant is on the heave acceleration row
    assert np.flatnonzero(mask[:, 24] == mc.ESTIMATED).tolist() == [5]


def test_family_sizes():
    assert sum(n.startswith("s") for n in mc.PARAM_NAMES) == 3
    assert sum(n.startswith("p") for n in mc.PARAM_NAMES) == 5
    assert sum(n.startswith("h") for n in mc.PARAM_NAMES) == 4
    for p in "ljw":
        assert sum(n.startswith(p) for n in mc.PARAM_NAMES) == 7


def test_round_trip_random_params():
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = random_params(rng)
        q = mc.params_from_theta(mc.assemble_theta(p))
        np.testing.assert_allclose(q.M, p.M, rtol=1e-14)
        np.testing.assert_allclose(q.B, p.B, rtol=1e-13, atol=1e-9)
        np.testing.assert_allclose(q.R, p.R, rtol=1e-13, atol=1e-9)
        assert q.C3 == pytest.approx(p.C3, rel=1e-13)


def test_theta_phi_matches_direct_rhs():
    rng = np.random.default_rng(2)
    p = random_params(rng)
    th = mc.assemble_theta(p)
    X = rng.normal(size=(1000, 12))
    U = mc.input_vector(rng.normal(scale=1e5, size=(1000, 6)))
    got = mc.state_derivative(th, X, U)
    want = np.array([direct_rhs(p, x, u) for x, u in zip(X, U)])
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * np.abs(want).max())


def test_zero_state_derivative_is_constant_column():
    p = random_params(np.random.default_rng(3))
    th = mc.assemble_theta(p)
    xd = mc.state_derivative(th, np.zeros(12), np.zeros(12))
    expected = np.zeros(12)
    expected[5] = th.named()["h4"]
    np.testing.assert_allclose(xd, expected)


def test_affine_superposition():
    rng = np.random.default_rng(4)
    th = mc.assemble_theta(random_params(rng))
    X1, X2 = rng.normal(size=(2, 12))
    U1, U2 = mc.input_vector(rng.normal(size=(2, 6)))
    a, b = 0.7, -1.3
    lhs = mc.state_derivative(th, a * X1 + b * X2, a * U1 + b * U2)
    rhs = (a * mc.state_derivative(th, X1, U1) + b * mc.state_derivative(th, X2, U2)
           - (a + b - 1) * th.H)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_kinematic_rows_copy_velocity():
    rng = np.random.default_rng(5)
    th = mc.assemble_theta(random_params(rng))
    X = rng.normal(size=12)
    xd = mc.state_derivative(th, X, mc.input_vector(rng.normal(size=6)))
    np.testing.assert_array_equal(xd[0::2], X[1::2])


def test_structure_violation_detected():
    th = mc.assemble_theta(random_params(np.random.default_rng(6)))
    th.values[1, 7] = 0.5
    with pytest.raises(StructureError):
        mc.params_from_theta(th)


def test_surge_row_sign_convention():
    th = mc.ThetaMatrix(np.zeros((12, 25)), mc.standard_mask())
    th.values[1, 0] = 5.827e-7
    th.values[1, 1] = 6.314e-5
    th.values[1, 13] = 7.092e-5
    named = th.named()
    assert named["s1"] == -5.827e-7
    assert named["s2"] == -6.314e-5
    assert named["s3"] == 7.092e-5


def test_parameter_validation():
    with pytest.raises(ParameterError):
        mc.SystemParameters(np.zeros(6), np.zeros((6, 6)), np.zeros((6, 6)))
    B = np.zeros((6, 6))
    B[0, 3] = 1.0
    with pytest.raises(ParameterError):
        mc.SystemParameters(np.ones(6), B, np.zeros((6, 6)))
    with pytest.raises(DimensionError):
        mc.SystemParameters(np.ones(5), np.zeros((6, 6)), np.zeros((6, 6)))


def test_theta_file_round_trip(tmp_path):
    th = mc.assemble_theta(random_params(np.random.default_rng(7)))
    path = tmp_path / "theta.json"
    mc.save_theta(path, th, {"dt": 0.01})
    back, meta = mc.load_theta(path)
    np.testing.assert_array_equal(back.values, th.values)
    np.testing.assert_array_equal(back.mask, th.mask)
    assert meta["dt"] == 0.01


def test_theta_file_errors(tmp_path):
    with pytest.raises(IngestionError):
        mc.load_theta(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nothing": 1}))
    with pytest.raises(IngestionError):
        mc.load_theta(bad)
