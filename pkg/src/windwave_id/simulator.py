"""
Fixed-step integration of the truth plant and of the identified model.

Truth plant
-----------
    (M + A_inf) q'' + B q' + R q + C3 e3 = F(t)

with the lumped external force

    F = F_aero + F_rad + F_exc + F_hydro + F_moor + F_pto.

``B`` and ``R`` are the structural matrices of the control-oriented model;
hydrostatic, mooring, PTO and radiation loads enter through ``F``.  The
recorded input ``U`` is exactly this lumped force at each sample, so the
dataset satisfies X' = theta* Phi(X, U) with
theta* = assemble_theta(structural.with_added_mass(A_inf)).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from windwave_id import model as mc
from windwave_id.environment import (
    AeroDrag,
    ExcitationCoeffTable,
    JonswapSpec,
    RegularWaveSpec,
    WaveComponentSet,
    WindField,
    WindSpec,
    excitation_forces,
    synthesize_waves,
)
from windwave_id.errors import (
    ConfigurationError,
    DimensionError,
    DivergenceError,
    IngestionError,
    ParameterError,
)
from windwave_id.hydroforces import (
    HydrostaticModel,
    JointKinematics,
    MooringModel,
    PtoModel,
    RadiationModel,
    hydrostatic_force,
    mooring_forces,
    pto_force,
    pto_generalized_forces,
)

N_DOF = 6
CHANNELS = ("aero", "rad", "exc", "hydro", "moor", "pto")
AERO_MODELS = ("quadratic", "linear", "off")
DEFAULT_LIMIT = 1e6


# --------------------------------------------------------------------------
# Integrator
# --------------------------------------------------------------------------


def step_count(dt: float, duration: float) -> int:
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if duration < dt:
        raise ParameterError(f"duration {duration} is shorter than dt {dt}")
    n = int(round(duration / dt))
    if abs(n * dt - duration) > 1e-9 * max(1.0, duration):
        raise ParameterError(f"duration {duration} is not an integer multiple of dt {dt}")
    return n


def integrate_rk4(derivative: Callable[[float, np.ndarray], np.ndarray], x0, dt: float,
                  duration: float, t0: float = 0.0, limit: float = np.inf
                  ) -> Tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step RK4.

    Returns ``(t, X)`` with ``X[j]`` the state at ``t[j] = t0 + j dt``.

    Raises
    ------
    DivergenceError
        When the state becomes non-finite or exceeds ``limit`` in absolute
        value; ``partial`` holds the trace up to the last good sample.
    """
    n = step_count(dt, duration)
    x = np.array(x0, dtype=float)
    out = np.empty((n + 1,) + x.shape)
    out[0] = x
    h2 = 0.5 * dt
    for j in range(n):
        t = t0 + j * dt
        k1 = derivative(t, x)
        k2 = derivative(t + h2, x + h2 * k1)
        k3 = derivative(t + h2, x + h2 * k2)
        k4 = derivative(t + dt, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > limit:
            t_fail = t0 + (j + 1) * dt
            partial = (t0 + dt * np.arange(j + 1), out[:j + 1].copy())
            raise DivergenceError(f"state diverged at t = {t_fail:.4g} s", t_fail, partial)
        out[j + 1] = x
    return t0 + dt * np.arange(n + 1), out


# --------------------------------------------------------------------------
# Scenario and plant
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiSineSpec:
    """Deterministic sum of regular waves (identification excitation)."""

    omegas: Tuple[float, ...]
    amplitude: float = 0.3
    seed: int = 0
    heading: float = 0.0

    def __post_init__(self):
        if len(self.omegas) < 1 or any(w <= 0 for w in self.omegas):
            raise ParameterError("multi-sine needs positive frequencies")
        if self.amplitude < 0:
            raise ParameterError("multi-sine amplitude must be non-negative")


def wave_components(spec, seed: Optional[int] = None) -> WaveComponentSet:
    """Component set of a wave spec, optionally overriding its seed."""
    if spec is None:
        return WaveComponentSet([], [], [])
    if isinstance(spec, MultiSineSpec):
        s = spec.seed if seed is None else seed
        phase = np.random.default_rng(s).uniform(0.0, 2.0 * math.pi, len(spec.omegas))
        return WaveComponentSet(np.full(len(spec.omegas), spec.amplitude),
                                np.array(spec.omegas, float), phase, spec.heading)
    if isinstance(spec, JonswapSpec) and seed is not None:
        spec = JonswapSpec(spec.Hs, spec.Tp, spec.gamma, spec.n_components, spec.omega_range,
                           seed, spec.heading)
    return synthesize_waves(spec)


@dataclass(frozen=True)
class Scenario:
    id: str
    wind: WindSpec
    waves: object = None                 # RegularWaveSpec | JonswapSpec | MultiSineSpec | None
    wec_status: str = "operational"
    heading: float = 0.0
    description: str = ""

    def __post_init__(self):
        if self.wec_status not in ("operational", "parked"):
            raise ConfigurationError(f"unknown WEC status {self.wec_status!r}", "scenario.wec_status")


@dataclass
class TruthPlant:
    structural: mc.SystemParameters
    radiation: RadiationModel
    hydrostatic: HydrostaticModel
    mooring: MooringModel
    pto: PtoModel
    lock: PtoModel
    kinematics: JointKinematics
    aero: AeroDrag
    excitation: ExcitationCoeffTable
    aero_model: str = "quadratic"

    def __post_init__(self):
        if self.aero_model not in AERO_MODELS:
            raise ConfigurationError(f"aero model must be one of {AERO_MODELS}", "plant.aero.model")

    @property
    def mass_matrix(self) -> np.ndarray:
        return np.diag(self.structural.M) + self.radiation.A_inf

    def effective_parameters(self) -> mc.SystemParameters:
        """Parameters of the control-oriented model that this plant realizes."""
        return self.structural.with_added_mass(np.diag(self.radiation.A_inf))

    def theta_true(self) -> mc.ThetaMatrix:
        return mc.assemble_theta(self.effective_parameters())


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 0.01
    duration: float = 200.0
    initial_state: Tuple[float, ...] = tuple([0.0] * 4 + [-10.71] + [0.0] * 7)
    seed: Optional[int] = None
    substeps: int = 1

    def __post_init__(self):
        step_count(self.dt, self.duration)
        if len(self.initial_state) != mc.N_STATE:
            raise DimensionError(f"initial_state must have {mc.N_STATE} entries")
        if self.substeps < 1:
            raise ParameterError("substeps must be >= 1")

    @property
    def n_samples(self) -> int:
        return step_count(self.dt, self.duration) + 1


@dataclass
class SimDataset:
    """Uniformly sampled record.  Arrays are sample-major: X is (N, 12)."""

    t: np.ndarray
    X: np.ndarray
    U: np.ndarray
    channels: Dict[str, np.ndarray]
    eta: np.ndarray
    wind: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.t)
        if self.X.shape != (n, mc.N_STATE) or self.U.shape != (n, mc.N_STATE):
            raise DimensionError("X and U must be (N, 12) on the time grid")
        for name, arr in self.channels.items():
            if arr.shape != (n, N_DOF):
                raise DimensionError(f"channel {name} must be (N, 6)")
        if self.eta.shape != (n,) or self.wind.shape != (n,):
            raise DimensionError("eta and wind must be (N,)")

    @property
    def n(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def theta_true(self) -> Optional[mc.ThetaMatrix]:
        d = self.metadata.get("theta_true")
        return mc.ThetaMatrix.from_dict(d) if d else None

    @property
    def forces(self) -> np.ndarray:
        """Lumped generalized forces (N, 6)."""
        return self.U[:, 1::2]


class _PlantFunction:
    """Vectorizable force and derivative evaluation for one simulation."""

    def __init__(self, plant: TruthPlant, scenario: Scenario, comps: WaveComponentSet,
                 wind: WindField, grid_dt: float):
        self.plant = plant
        self.parked = scenario.wec_status == "parked"
        self.joint = plant.lock if self.parked else plant.pto
        self.J = plant.kinematics.jacobian
        self.Minv = np.linalg.inv(plant.mass_matrix)
        self.B = plant.structural.B
        self.R = plant.structural.R
        self.C3 = plant.structural.C3
        self.rad = plant.radiation
        self.nr = plant.radiation.n_states
        table = plant.excitation.for_heading(
            scenario.heading, plant.kinematics.positions, plant.kinematics.heading_deg)
        self.comps = comps
        self.table = table
        self.wind = wind
        self.cos_wind = math.cos(math.radians(scenario.heading))
        self.grid_dt = grid_dt
        self._exc = None
        self.v_ref = wind.spec.mean_speed * self.cos_wind

    def precompute(self, t_grid: np.ndarray) -> None:
        """Tabulate excitation and wind on the half-step grid ``t_grid``."""
        self._exc = self._excitation(t_grid)
        self._v = self.wind(t_grid) * self.cos_wind

    def _excitation(self, t):
        if len(self.comps) == 0:
            return np.zeros((np.size(t), N_DOF))
        return excitation_forces(self.comps, self.table, t)

    def forces(self, idx, z):
        """Force channels for states ``z`` (..., 12 + nr) at half-grid indices."""
        X = z[..., :mc.N_STATE]
        xr = z[..., mc.N_STATE:]
        q = X[..., 0::2]
        qd = X[..., 1::2]
        p = self.plant
        v = self._v[idx]
        aero = np.zeros(q.shape)
        if p.aero_model != "off":
            v_rel = v - (qd[..., 0] + p.aero.hub_height * qd[..., 1])
            half = 0.5 * p.aero.air_density * p.aero.Cd * p.aero.area
            if p.aero_model == "quadratic":
                f = half * v_rel * np.abs(v_rel)
            else:
                f = half * abs(self.v_ref) * (2.0 * v_rel - self.v_ref)
            aero[..., 0] = f
            aero[..., 1] = f * p.aero.hub_height
        rad = -(xr @ self.rad.C_big.T) if self.nr else np.zeros(q.shape)
        exc = self._exc[idx]
        hydro = hydrostatic_force(p.hydrostatic, q)
        moor = mooring_forces(p.mooring, q, qd)
        # hinge angle uses heave relative to the reference draft
        q_s = q @ self.J.T - p.kinematics.q3_ref / p.kinematics.radius
        q_r = q_s - q[..., 3:]
        qd_r = qd @ self.J.T - qd[..., 3:]
        tau = pto_force(self.joint, q_r, qd_r)
        pto = pto_generalized_forces(p.kinematics, tau)
        return {"aero": aero, "rad": rad, "exc": exc, "hydro": hydro, "moor": moor, "pto": pto}

    def derivative_at(self, idx: int, z: np.ndarray) -> np.ndarray:
        ch = self.forces(idx, z)
        F = ch["aero"] + ch["rad"] + ch["exc"] + ch["hydro"] + ch["moor"] + ch["pto"]
        X = z[:mc.N_STATE]
        q, qd = X[0::2], X[1::2]
        rhs = F - self.B @ qd - self.R @ q
        rhs[2] -= self.C3
        qdd = self.Minv @ rhs
        dz = np.empty_like(z)
        dz[0:mc.N_STATE:2] = qd
        dz[1:mc.N_STATE:2] = qdd
        if self.nr:
            dz[mc.N_STATE:] = self.rad.A_big @ z[mc.N_STATE:] + self.rad.B_big @ qd
        return dz


def _seeds(scenario: Scenario, seed: Optional[int]) -> Tuple[Optional[int], int]:
    if seed is None:
        return None, scenario.wind.seed
    ss = np.random.SeedSequence(int(seed)).generate_state(2)
    return int(ss[0]), int(ss[1])


def run_truth(plant: TruthPlant, scenario: Scenario, config: SimulationConfig,
              metadata: Optional[Mapping] = None) -> SimDataset:
    """Integrate the truth plant and record every force channel.

    A global ``config.seed`` deterministically replaces the wave and wind
    seeds of the scenario.  Integration uses RK4 at ``dt / substeps`` with
    excitation and wind tabulated on the half-step grid.
    """
    n_steps = step_count(config.dt, config.duration)
    h = config.dt / config.substeps
    n_fine = n_steps * config.substeps
    wave_seed, wind_seed = _seeds(scenario, config.seed)
    comps = wave_components(scenario.waves, wave_seed)
    wind_spec = WindSpec(scenario.wind.mean_speed, scenario.wind.turbulence_intensity,
                         scenario.wind.heading, wind_seed, scenario.wind.mode,
                         scenario.wind.correlation_time, scenario.wind.sample_dt)
    wind = WindField(wind_spec, config.duration + config.dt)
    fn = _PlantFunction(plant, scenario, comps, wind, h)
    t_half = 0.5 * h * np.arange(2 * n_fine + 1)
    fn.precompute(t_half)

    z0 = np.concatenate([np.asarray(config.initial_state, float), np.zeros(fn.rad.n_states)])
    Z = np.empty((n_steps + 1, z0.size))
    Z[0] = z0
    z = z0.copy()
    for j in range(n_fine):
        i0 = 2 * j
        k1 = fn.derivative_at(i0, z)
        k2 = fn.derivative_at(i0 + 1, z + 0.5 * h * k1)
        k3 = fn.derivative_at(i0 + 1, z + 0.5 * h * k2)
        k4 = fn.derivative_at(i0 + 2, z + h * k3)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)) or np.max(np.abs(z[:mc.N_STATE])) > DEFAULT_LIMIT:
            t_fail = (j + 1) * h
            k = (j + 1) // config.substeps
            raise DivergenceError(f"truth simulation diverged at t = {t_fail:.4g} s", t_fail,
                                  (config.dt * np.arange(k), Z[:k, :mc.N_STATE].copy()))
        if (j + 1) % config.substeps == 0:
            Z[(j + 1) // config.substeps] = z

    idx = 2 * config.substeps * np.arange(n_steps + 1)
    channels = fn.forces(idx, Z)
    F = sum(channels[c] for c in CHANNELS)
    t = config.dt * np.arange(n_steps + 1)
    X = Z[:, :mc.N_STATE].copy()
    eta = comps.elevation(t) if len(comps) else np.zeros(t.size)
    meta = {
        "scenario_id": scenario.id,
        "dt": config.dt,
        "duration": config.duration,
        "n_samples": int(t.size),
        "seed": config.seed,
        "wave_seed": wave_seed,
        "wind_seed": wind_seed,
        "theta_true": plant.theta_true().to_dict(),
    }
    if metadata:
        meta.update(dict(metadata))
    return SimDataset(t, X, mc.input_vector(F), channels, eta, fn.wind(t), meta)


def lumped_residual(plant: TruthPlant, ds: SimDataset) -> Tuple[float, float]:
    """(||M q'' + B q' + R q + C - F||, ||F||) over interior samples.

    Accelerations come from central differences of the velocity states.
    """
    qd = ds.X[:, 1::2]
    q = ds.X[:, 0::2]
    qdd = (qd[2:] - qd[:-2]) / (2.0 * ds.dt)
    F = ds.forces[1:-1]
    lhs = qdd @ plant.mass_matrix.T + qd[1:-1] @ plant.structural.B.T + q[1:-1] @ plant.structural.R.T
    lhs[:, 2] += plant.structural.C3
    return float(np.linalg.norm(lhs - F)), float(np.linalg.norm(F))


# --------------------------------------------------------------------------
# Resimulation of the identified model
# --------------------------------------------------------------------------


def resimulate(theta_hat: mc.ThetaMatrix, U_trace, x0, dt: float, hold: str = "zoh",
               limit: float = DEFAULT_LIMIT) -> np.ndarray:
    """Integrate X' = theta_hat Phi(X, U(t)) on the sample grid of ``U_trace``.

    ``hold`` selects the input between samples: ``"zoh"`` keeps U(t_k) over
    the step, ``"linear"`` interpolates to U(t_k + dt/2) at the midpoint
    stages.  Returns the (N, 12) state trace.

    Raises
    ------
    DivergenceError
        With the partial trace when the state leaves ``limit``.
    """
    U = np.asarray(U_trace, float)
    if U.ndim != 2 or U.shape[1] != mc.N_STATE:
        raise DimensionError("U_trace must be (N, 12)")
    if hold not in ("zoh", "linear"):
        raise ParameterError(f"hold must be 'zoh' or 'linear', got {hold!r}")
    A = theta_hat.A
    # affine input term per sample: B U_k + H
    g = U @ theta_hat.B.T + theta_hat.H
    if hold == "linear":
        g_mid = 0.5 * (g[:-1] + g[1:])
        g_end = g[1:]
    else:
        g_mid = g[:-1]
        g_end = g[:-1]
    n = U.shape[0]
    x = np.array(x0, float)
    out = np.empty((n, mc.N_STATE))
    out[0] = x
    h2 = 0.5 * dt
    for j in range(n - 1):
        k1 = A @ x + g[j]
        k2 = A @ (x + h2 * k1) + g_mid[j]
        k3 = A @ (x + h2 * k2) + g_mid[j]
        k4 = A @ (x + dt * k3) + g_end[j]
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > limit:
            t_fail = (j + 1) * dt
            raise DivergenceError(f"resimulation diverged at t = {t_fail:.4g} s", t_fail,
                                  out[:j + 1].copy())
        out[j + 1] = x
    return out


# --------------------------------------------------------------------------
# Dataset files
# --------------------------------------------------------------------------


def dataset_columns() -> list:
    cols = ["t"] + [f"x{i + 1}" for i in range(mc.N_STATE)] + [f"u{i + 1}" for i in range(mc.N_STATE)]
    cols += ["eta", "wind"]
    cols += [f"{c}_{d + 1}" for c in CHANNELS for d in range(N_DOF)]
    return cols


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def export_dataset(ds: SimDataset, path) -> None:
    """Write ``path`` (CSV, 17 significant digits) and its JSON sidecar."""
    cols = dataset_columns()
    data = np.column_stack([ds.t, ds.X, ds.U, ds.eta, ds.wind] + [ds.channels[c] for c in CHANNELS])
    np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
    with open(sidecar_path(path), "w") as f:
        json.dump(ds.metadata, f, indent=2, sort_keys=True)


def import_dataset(path, rtol_grid: float = 1e-6) -> SimDataset:
    """Read a dataset CSV (and its sidecar, if present) with validation.

    Raises
    ------
    IngestionError
        On a missing file, malformed header (naming absent columns),
        non-numeric or non-finite cells (naming row and column) or a
        non-uniform time grid (naming the row).
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"dataset file not found: {path}")
    with open(path) as f:
        header = [h.strip() for h in f.readline().strip().split(",")]
    expected = dataset_columns()
    missing = [c for c in expected if c not in header]
    if missing:
        raise IngestionError(f"{path}: missing columns: {', '.join(missing)}")
    extra = [c for c in header if c not in expected]
    if extra:
        raise IngestionError(f"{path}: unexpected columns: {', '.join(extra)}")
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise IngestionError(f"{path}: unreadable cell ({exc})") from None
    if raw.shape[1] != len(header):
        raise IngestionError(f"{path}: expected {len(header)} columns, found {raw.shape[1]}")
    bad = np.argwhere(~np.isfinite(raw))
    if bad.size:
        r, c = bad[0]
        raise IngestionError(f"{path}: non-finite value at row {r + 2}, column {header[c]}")
    if raw.shape[0] < 2:
        raise IngestionError(f"{path}: need at least 2 samples")
    col = {name: raw[:, i] for i, name in enumerate(header)}
    t = col["t"]
    dts = np.diff(t)
    dt = dts[0]
    off = np.nonzero(np.abs(dts - dt) > rtol_grid * abs(dt))[0]
    if dt <= 0 or off.size:
        r = int(off[0]) + 3 if off.size else 3
        raise IngestionError(f"{path}: non-uniform time grid at row {r}")
    X = np.column_stack([col[f"x{i + 1}"] for i in range(mc.N_STATE)])
    U = np.column_stack([col[f"u{i + 1}"] for i in range(mc.N_STATE)])
    if np.any(U[:, 0::2] != 0.0):
        raise IngestionError(f"{path}: displacement input slots u1, u3, ... must be zero")
    channels = {c: np.column_stack([col[f"{c}_{d + 1}"] for d in range(N_DOF)]) for c in CHANNELS}
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        with open(side) as f:
            meta = json.load(f)
    return SimDataset(t, X, U, channels, col["eta"], col["wind"], meta)
