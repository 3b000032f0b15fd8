"""
Run configuration: JSON presets, deep merging and object construction.

A configuration is a single JSON document with the sections ``scenario``,
``simulation``, ``plant``, ``estimator``, ``baseline`` and ``evaluation``.
Values resolve as ``defaults.json`` <- scenario preset <- user file.
Presets live in the package ``presets`` directory; the environment variable
``WINDWAVE_CONFIG_DIR`` adds a directory searched first.
"""

from __future__ import annotations

import copy
import json
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from windwave_id import model as mc
from windwave_id.environment import (
    AeroDrag,
    ExcitationCoeffTable,
    JonswapSpec,
    RegularWaveSpec,
    WindSpec,
)
from windwave_id.errors import ConfigurationError, WindWaveError
from windwave_id.hydroforces import (
    HydrostaticModel,
    JointKinematics,
    KernelRealization,
    MooringModel,
    PtoModel,
    RadiationModel,
    fit_radiation_kernel,
    load_kernel_csv,
)
from windwave_id.simulator import MultiSineSpec, Scenario, SimulationConfig, TruthPlant

PRESET_DIR = Path(__file__).resolve().parent / "presets"
CONFIG_ENV = "WINDWAVE_CONFIG_DIR"
CASE_IDS = tuple(f"case{i}" for i in range(1, 7))


def _search_dirs() -> List[Path]:
    dirs = []
    if os.environ.get(CONFIG_ENV):
        dirs.append(Path(os.environ[CONFIG_ENV]))
    dirs.append(PRESET_DIR)
    return dirs


def available_presets() -> List[str]:
    names = set()
    for d in _search_dirs():
        if d.is_dir():
            names.update(p.stem for p in d.glob("*.json") if p.stem != "defaults")
    return sorted(names)


def _read_json(path: Path) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})", str(path)) from None
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}", str(path)) from None


def read_config_file(path) -> dict:
    """User configuration file without preset resolution."""
    user = _read_json(Path(path))
    user.pop("preset", None)
    return user


def _find(name: str) -> Optional[Path]:
    for d in _search_dirs():
        p = d / f"{name}.json"
        if p.is_file():
            return p
    return None


def deep_merge(base: Mapping, override: Mapping) -> dict:
    """Recursive dict merge; lists and scalars in ``override`` replace."""
    out = copy.deepcopy(dict(base))
    for key, val in override.items():
        if isinstance(val, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def defaults() -> dict:
    return _read_json(_find("defaults") or PRESET_DIR / "defaults.json")


def load_config(scenario: Optional[str] = None, config_path=None,
                overrides: Optional[Mapping] = None) -> dict:
    """Resolve a full configuration dict.

    ``scenario`` is a preset id; ``config_path`` a user JSON file which may
    itself name a preset under ``"preset"``.
    """
    cfg = defaults()
    user = _read_json(Path(config_path)) if config_path else {}
    name = scenario or user.get("preset")
    if name:
        path = _find(name)
        if path is None:
            raise ConfigurationError(
                f"unknown scenario {name!r}; available presets: {', '.join(available_presets())}",
                "scenario.id")
        cfg = deep_merge(cfg, _read_json(path))
    cfg = deep_merge(cfg, {k: v for k, v in user.items() if k != "preset"})
    if overrides:
        cfg = deep_merge(cfg, overrides)
    validate_config(cfg)
    return cfg


# --------------------------------------------------------------------------
# Validation helpers
# --------------------------------------------------------------------------


def _get(cfg: Mapping, path: str):
    node: Any = cfg
    for part in path.split("."):
        if not isinstance(node, Mapping) or part not in node:
            raise ConfigurationError(f"missing field {path}", path)
        node = node[part]
    return node


def _num(cfg, path, positive=False, nonneg=False):
    v = _get(cfg, path)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigurationError(f"{path} must be a finite number, got {v!r}", path)
    if positive and v <= 0:
        raise ConfigurationError(f"{path} must be positive, got {v}", path)
    if nonneg and v < 0:
        raise ConfigurationError(f"{path} must be non-negative, got {v}", path)
    return float(v)


def _vec(cfg, path, n=None, positive=False, nonneg=False):
    v = _get(cfg, path)
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigurationError(f"{path} must be a list of numbers", path)
    if n is not None and len(v) != n:
        raise ConfigurationError(f"{path} must have {n} entries, got {len(v)}", path)
    a = np.asarray(v, float)
    if not np.all(np.isfinite(a)):
        raise ConfigurationError(f"{path} has non-finite entries", path)
    if positive and np.any(a <= 0):
        raise ConfigurationError(f"{path} entries must be positive", path)
    if nonneg and np.any(a < 0):
        raise ConfigurationError(f"{path} entries must be non-negative", path)
    return a


def _wrap(path: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigurationError:
        raise
    except WindWaveError as exc:
        raise ConfigurationError(str(exc), path) from None


def validate_config(cfg: Mapping) -> None:
    """Build every component once so errors surface with a field path."""
    build_scenario(cfg)
    build_simulation(cfg)
    build_plant(cfg)
    gamma_spec(cfg)
    baseline_spec(cfg)
    hold = _get(cfg, "evaluation.hold")
    if hold not in ("zoh", "linear"):
        raise ConfigurationError("evaluation.hold must be 'zoh' or 'linear'", "evaluation.hold")
    fr = _num(cfg, "evaluation.floor_ratio")
    if not 0 < fr < 1:
        raise ConfigurationError("evaluation.floor_ratio must lie in (0, 1)", "evaluation.floor_ratio")


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------


def build_scenario(cfg: Mapping) -> Scenario:
    sc = _get(cfg, "scenario")
    heading = _num(cfg, "scenario.heading")
    w = _get(cfg, "scenario.wind")
    wind = _wrap("scenario.wind", WindSpec,
                 mean_speed=_num(cfg, "scenario.wind.mean_speed", nonneg=True),
                 turbulence_intensity=float(w.get("turbulence_intensity", 0.0)),
                 heading=heading % 360.0, seed=int(w.get("seed", 0)),
                 mode=w.get("mode", "steady"),
                 correlation_time=float(w.get("correlation_time", 10.0)),
                 sample_dt=float(w.get("sample_dt", 0.1)))
    wv = _get(cfg, "scenario.waves")
    kind = wv.get("type", "none")
    if kind == "none":
        waves = None
    elif kind == "regular":
        waves = _wrap("scenario.waves", RegularWaveSpec, Tp=_num(cfg, "scenario.waves.Tp"),
                      Hs=wv.get("Hs"), amplitude=wv.get("amplitude"), heading=heading % 360.0)
    elif kind == "jonswap":
        waves = _wrap("scenario.waves", JonswapSpec,
                      Hs=_num(cfg, "scenario.waves.Hs"), Tp=_num(cfg, "scenario.waves.Tp"),
                      gamma=float(wv.get("gamma", 3.3)),
                      n_components=int(wv.get("n_components", 200)),
                      omega_range=tuple(wv.get("omega_range", (0.3, 3.0))),
                      seed=int(wv.get("seed", 0)), heading=heading % 360.0)
    elif kind == "multisine":
        waves = _wrap("scenario.waves", MultiSineSpec,
                      omegas=tuple(_vec(cfg, "scenario.waves.omegas", positive=True)),
                      amplitude=_num(cfg, "scenario.waves.amplitude", nonneg=True),
                      seed=int(wv.get("seed", 0)), heading=heading % 360.0)
    else:
        raise ConfigurationError(f"unknown wave type {kind!r}", "scenario.waves.type")
    return _wrap("scenario", Scenario, id=str(sc.get("id", "custom")), wind=wind, waves=waves,
                 wec_status=sc.get("wec_status", "operational"), heading=heading,
                 description=sc.get("description", ""))


def build_simulation(cfg: Mapping, seed: Optional[int] = None) -> SimulationConfig:
    s = _get(cfg, "simulation")
    x0 = _vec(cfg, "simulation.initial_state", n=mc.N_STATE)
    return _wrap("simulation", SimulationConfig,
                 dt=_num(cfg, "simulation.dt", positive=True),
                 duration=_num(cfg, "simulation.duration", positive=True),
                 initial_state=tuple(float(v) for v in x0),
                 seed=seed if seed is not None else s.get("seed"),
                 substeps=int(s.get("substeps", 1)))


def _matrix_from_entries(cfg, path) -> np.ndarray:
    entries = _get(cfg, path)
    mat = np.zeros((6, 6))
    for key, val in entries.items():
        if len(key) != 3 or not key[1:].isdigit():
            raise ConfigurationError(f"bad entry name {key!r} (expected e.g. R21)", f"{path}.{key}")
        i, j = int(key[1]) - 1, int(key[2]) - 1
        if (i, j) not in mc.COUPLING_PATTERN:
            raise ConfigurationError(f"{key} lies outside the coupling pattern", f"{path}.{key}")
        mat[i, j] = _num(cfg, f"{path}.{key}")
    return mat


def _radiation(cfg) -> RadiationModel:
    added = _vec(cfg, "plant.radiation.added_mass", n=6, nonneg=True)
    rad = _get(cfg, "plant.radiation")
    kernels: Dict = {}
    if rad.get("kernel_csv"):
        t, samples = _wrap("plant.radiation.kernel_csv", load_kernel_csv, rad["kernel_csv"])
        order = int(rad.get("fit_order", 4))
        for key, K in samples.items():
            kernels[key] = _wrap("plant.radiation.kernel_csv", fit_radiation_kernel, t, K, order)
    else:
        for n, kd in enumerate(rad.get("kernels", [])):
            p = f"plant.radiation.kernels[{n}]"
            try:
                i, k = int(kd["i"]) - 1, int(kd["k"]) - 1
                kr = KernelRealization.damped_oscillator(float(kd["k0"]), float(kd["beta"]),
                                                         float(kd["omega0"]))
            except (KeyError, TypeError, ValueError):
                raise ConfigurationError(f"{p} needs numeric i, k, k0, beta, omega0", p) from None
            if kd["beta"] <= 0:
                raise ConfigurationError(f"{p}.beta must be positive", f"{p}.beta")
            kernels[(i, k)] = kr
    return _wrap("plant.radiation", RadiationModel, A_inf=added, kernels=kernels)


def build_plant(cfg: Mapping) -> TruthPlant:
    M = _vec(cfg, "plant.mass", n=6, positive=True)
    R = _matrix_from_entries(cfg, "plant.stiffness")
    B = _matrix_from_entries(cfg, "plant.damping")
    hyd = _wrap("plant.hydrostatic", HydrostaticModel,
                rho=_num(cfg, "plant.hydrostatic.rho", positive=True),
                g=_num(cfg, "plant.hydrostatic.g", positive=True),
                V=_num(cfg, "plant.hydrostatic.V", positive=True),
                C_hydro=_vec(cfg, "plant.hydrostatic.C_diag", n=6))
    moor_c = _get(cfg, "plant.mooring").get("c")
    weight = M[2] * hyd.g
    c = (weight - hyd.buoyancy) if moor_c is None else _num(cfg, "plant.mooring.c")
    moor = _wrap("plant.mooring", MooringModel,
                 R_m=_vec(cfg, "plant.mooring.R_m", n=3, nonneg=True),
                 B_m=_vec(cfg, "plant.mooring.B_m", n=3, nonneg=True), c=c)
    z_eq = _num(cfg, "plant.equilibrium_heave")
    C3 = _get(cfg, "plant").get("C3")
    if C3 is None:
        # heave balance at the equilibrium draft fixes the constant
        k_heave = hyd.C_hydro[2, 2] + moor.R_m[2] + R[2, 2]
        C3 = hyd.buoyancy + moor.c - k_heave * z_eq
    structural = _wrap("plant", mc.SystemParameters, M=M, B=B, R=R, C3=float(C3))
    pto = _wrap("plant.pto", PtoModel, K_PTO=_num(cfg, "plant.pto.K_PTO", nonneg=True),
                B_PTO=_num(cfg, "plant.pto.B_PTO", nonneg=True))
    lock = _wrap("plant.lock", PtoModel, K_PTO=_num(cfg, "plant.lock.K", positive=True),
                 B_PTO=_num(cfg, "plant.lock.B", nonneg=True))
    kin = _wrap("plant.kinematics", JointKinematics,
                radius=_vec(cfg, "plant.kinematics.radius", n=3, positive=True),
                heading_deg=_vec(cfg, "plant.kinematics.heading_deg", n=3), q3_ref=z_eq)
    aero_cfg = _get(cfg, "plant.aero")
    aero = _wrap("plant.aero", AeroDrag, Cd=_num(cfg, "plant.aero.Cd", positive=True),
                 area=_num(cfg, "plant.aero.area", positive=True),
                 air_density=_num(cfg, "plant.aero.air_density", positive=True),
                 hub_height=_num(cfg, "plant.aero.hub_height", positive=True))
    exc_cfg = _get(cfg, "plant.excitation")
    if exc_cfg.get("csv"):
        table = _wrap("plant.excitation.csv", ExcitationCoeffTable.from_csv, exc_cfg["csv"])
    else:
        table = _wrap("plant.excitation", ExcitationCoeffTable.synthetic,
                      _vec(cfg, "plant.excitation.gains", n=6, nonneg=True),
                      _vec(cfg, "plant.excitation.corner", n=6, positive=True),
                      _vec(cfg, "plant.excitation.phase0", n=6),
                      _vec(cfg, "plant.excitation.delay", n=6))
    plant = _wrap("plant", TruthPlant, structural=structural, radiation=_radiation(cfg),
                  hydrostatic=hyd, mooring=moor, pto=pto, lock=lock, kinematics=kin,
                  aero=aero, excitation=table, aero_model=aero_cfg.get("model", "quadratic"))
    sc = build_scenario(cfg)
    if sc.waves is not None:
        comps_w = _wave_band(sc.waves)
        if comps_w[0] < table.omega[0] or comps_w[1] > table.omega[-1]:
            raise ConfigurationError(
                f"excitation table [{table.omega[0]:.3g}, {table.omega[-1]:.3g}] rad/s does not "
                f"cover wave band [{comps_w[0]:.3g}, {comps_w[1]:.3g}]", "plant.excitation")
    return plant


def _wave_band(waves):
    if isinstance(waves, RegularWaveSpec):
        w = 2 * math.pi / waves.Tp
        return w, w
    if isinstance(waves, JonswapSpec):
        return waves.omega_range
    return min(waves.omegas), max(waves.omegas)


GAMMA_MODES = {"scalar": 1, "family": 6, "row": 12, "row_const": 13}


def gamma_spec(cfg: Mapping) -> tuple:
    mode = _get(cfg, "estimator.gamma_mode")
    if mode not in GAMMA_MODES:
        raise ConfigurationError(f"estimator.gamma_mode must be one of {sorted(GAMMA_MODES)}",
                                 "estimator.gamma_mode")
    g = _vec(cfg, "estimator.gamma", n=GAMMA_MODES[mode], positive=True)
    for key in ("k", "ell", "window"):
        _num(cfg, f"estimator.{key}", positive=True)
    integ = _get(cfg, "estimator.integrator")
    if integ not in ("implicit", "explicit"):
        raise ConfigurationError("estimator.integrator must be 'implicit' or 'explicit'",
                                 "estimator.integrator")
    return mode, g


def baseline_spec(cfg: Mapping) -> tuple:
    mode = _get(cfg, "baseline.gain_mode")
    if mode not in GAMMA_MODES:
        raise ConfigurationError(f"baseline.gain_mode must be one of {sorted(GAMMA_MODES)}",
                                 "baseline.gain_mode")
    g = _vec(cfg, "baseline.G", n=GAMMA_MODES[mode], positive=True)
    _num(cfg, "baseline.L", positive=True)
    return mode, g
