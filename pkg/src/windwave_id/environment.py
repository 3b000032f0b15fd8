"""
Wind and wave forcing.

Waves are represented as a finite set of linear components; the excitation
force on each mode is obtained from tabulated per-unit-amplitude transfer
coefficients:

    F_i(t) = sum_n a_n |f_i(w_n)| cos(w_n t + phi_n + arg f_i(w_n))

Turbulent wind is a first-order Gauss-Markov (discrete Ornstein-Uhlenbeck)
process with prescribed mean and standard deviation I * v.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import CubicSpline

from windwave_id.errors import (
    DomainError,
    IngestionError,
    InterpolationRangeError,
    ParameterError,
)

GRAVITY = 9.81
N_DOF = 6


# --------------------------------------------------------------------------
# Sea-state specifications
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularWaveSpec:
    """Monochromatic wave.  Give either ``amplitude`` or ``Hs`` (= 2 a)."""

    Tp: float
    Hs: Optional[float] = None
    amplitude: Optional[float] = None
    heading: float = 0.0

    def __post_init__(self):
        if self.amplitude is None and self.Hs is None:
            raise ParameterError("regular wave needs amplitude or Hs")
        if self.Tp <= 0:
            raise ParameterError(f"Tp must be positive, got {self.Tp}")
        if self.wave_amplitude < 0:
            raise ParameterError("wave amplitude must be non-negative")
        if not 0.0 <= self.heading < 360.0:
            raise ParameterError(f"heading must lie in [0, 360), got {self.heading}")

    @property
    def wave_amplitude(self) -> float:
        return self.amplitude if self.amplitude is not None else 0.5 * self.Hs


@dataclass(frozen=True)
class JonswapSpec:
    Hs: float
    Tp: float
    gamma: float = 3.3
    n_components: int = 200
    omega_range: Tuple[float, float] = (0.3, 3.0)
    seed: int = 0
    heading: float = 0.0

    def __post_init__(self):
        if self.Hs < 0:
            raise ParameterError(f"Hs must be non-negative, got {self.Hs}")
        if self.Tp <= 0:
            raise ParameterError(f"Tp must be positive, got {self.Tp}")
        if self.gamma < 1:
            raise ParameterError(f"peak factor must be >= 1, got {self.gamma}")
        if self.n_components < 1:
            raise ParameterError("need at least one wave component")
        lo, hi = self.omega_range
        if not 0 < lo < hi:
            raise ParameterError(f"invalid omega_range {self.omega_range}")
        if not 0.0 <= self.heading < 360.0:
            raise ParameterError(f"heading must lie in [0, 360), got {self.heading}")

    @property
    def omega_peak(self) -> float:
        return 2.0 * math.pi / self.Tp


WaveSpec = Union[RegularWaveSpec, JonswapSpec]


def _jonswap_shape(omega: np.ndarray, omega_p: float, gamma: float) -> np.ndarray:
    sigma = np.where(omega <= omega_p, 0.07, 0.09)
    r = np.exp(-((omega - omega_p) ** 2) / (2.0 * sigma**2 * omega_p**2))
    return omega**-5.0 * np.exp(-1.25 * (omega_p / omega) ** 4) * gamma**r


@lru_cache(maxsize=64)
def _jonswap_m0_unit(omega_p: float, gamma: float) -> float:
    # dense trapezoid over the whole energetic band; tail beyond 25 wp < 1e-5 m0
    w = np.linspace(0.2 * omega_p, 25.0 * omega_p, 200_001)
    return float(np.trapezoid(_jonswap_shape(w, omega_p, gamma), w))


def jonswap_spectrum(omega, spec: JonswapSpec):
    """JONSWAP density S(w) [m^2 s], scaled so that 4 sqrt(m0) = Hs.

    The Phillips constant is replaced by this normalization; ``omega`` must be
    strictly positive (scalar or array).
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0.0):
        raise DomainError("JONSWAP spectrum is defined for omega > 0 only")
    wp = spec.omega_peak
    scale = (spec.Hs / 4.0) ** 2 / _jonswap_m0_unit(wp, float(spec.gamma))
    s = scale * _jonswap_shape(w, wp, spec.gamma)
    return float(s) if np.ndim(omega) == 0 else s


# --------------------------------------------------------------------------
# Wave components
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WaveComponentSet:
    amplitude: np.ndarray
    omega: np.ndarray
    phase: np.ndarray
    heading: float = 0.0

    def __post_init__(self):
        for name in ("amplitude", "omega", "phase"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), float)))
        if not (self.amplitude.shape == self.omega.shape == self.phase.shape):
            raise ParameterError("component arrays must have equal length")

    def __len__(self) -> int:
        return self.omega.size

    @property
    def m0(self) -> float:
        """Zeroth moment represented by the discrete set (sum a^2 / 2)."""
        return float(np.sum(self.amplitude**2) / 2.0)

    def scaled(self, c: float) -> "WaveComponentSet":
        return WaveComponentSet(c * self.amplitude, self.omega, self.phase, self.heading)

    def elevation(self, t) -> np.ndarray:
        """Free-surface elevation at the origin."""
        t = np.atleast_1d(np.asarray(t, float))
        out = np.empty(t.shape)
        for sl in _chunks(t.size):
            arg = np.outer(t[sl], self.omega) + self.phase
            out[sl] = np.cos(arg) @ self.amplitude
        return out


def _chunks(n: int, size: int = 4096):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


def synthesize_waves(spec: WaveSpec) -> WaveComponentSet:
    """Discrete component set for a regular or JONSWAP sea state.

    JONSWAP components sit at the centres of ``n_components`` equal bins over
    ``omega_range`` with amplitudes sqrt(2 S dw) and uniform random phases
    drawn from ``spec.seed``.
    """
    if isinstance(spec, RegularWaveSpec):
        return WaveComponentSet(
            [spec.wave_amplitude], [2.0 * math.pi / spec.Tp], [0.0], spec.heading)
    lo, hi = spec.omega_range
    n = spec.n_components
    dw = (hi - lo) / n
    omega = lo + (np.arange(n) + 0.5) * dw
    amp = np.sqrt(2.0 * jonswap_spectrum(omega, spec) * dw)
    rng = np.random.default_rng(spec.seed)
    phase = rng.uniform(0.0, 2.0 * math.pi, n)
    return WaveComponentSet(amp, omega, phase, spec.heading)


# --------------------------------------------------------------------------
# Excitation coefficients
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExcitationCoeffTable:
    """Per-unit-amplitude excitation magnitude/phase for each mode.

    ``magnitude`` and ``phase`` have shape (K, 6) on the strictly increasing
    frequency grid ``omega`` (K,).  Values are linearly interpolated.
    """

    omega: np.ndarray
    magnitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, float)
        mag = np.asarray(self.magnitude, float)
        ph = np.asarray(self.phase, float)
        if w.ndim != 1 or w.size < 2 or np.any(np.diff(w) <= 0):
            raise ParameterError("excitation omega grid must be strictly increasing")
        if mag.shape != (w.size, N_DOF) or ph.shape != (w.size, N_DOF):
            raise ParameterError(f"magnitude/phase must have shape ({w.size}, {N_DOF})")
        if np.any(mag < 0):
            raise ParameterError("excitation magnitudes must be non-negative")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "magnitude", mag)
        object.__setattr__(self, "phase", ph)

    def evaluate(self, omega) -> Tuple[np.ndarray, np.ndarray]:
        """Interpolated (magnitude, phase), each of shape (len(omega), 6)."""
        w = np.atleast_1d(np.asarray(omega, float))
        lo, hi = self.omega[0], self.omega[-1]
        if np.any(w < lo) or np.any(w > hi):
            raise InterpolationRangeError(
                f"frequencies [{w.min():.4g}, {w.max():.4g}] rad/s outside table [{lo:.4g}, {hi:.4g}]")
        mag = np.column_stack([np.interp(w, self.omega, self.magnitude[:, i]) for i in range(N_DOF)])
        ph = np.column_stack([np.interp(w, self.omega, self.phase[:, i]) for i in range(N_DOF)])
        return mag, ph

    def for_heading(self, heading_deg: float, wec_positions=None,
                    wec_headings_deg=None) -> "ExcitationCoeffTable":
        """Directional stand-in for axial tables.

        Surge and pitch are scaled by cos(beta); WEC i by cos(beta - psi_i)
        with psi_i its arm heading; heave is unchanged.  A negative cosine is
        carried as a phase flip.  If ``wec_positions`` (3 x 2, metres) are
        given, WEC phases also get the deep-water propagation delay
        -k (x cos beta + y sin beta), k = w^2 / g.
        """
        beta = math.radians(heading_deg)
        factors = np.ones(N_DOF)
        factors[0] = factors[1] = math.cos(beta)
        if wec_headings_deg is not None:
            for i, psi in enumerate(wec_headings_deg):
                factors[3 + i] = math.cos(beta - math.radians(psi))
        mag = self.magnitude * np.abs(factors)
        ph = self.phase + np.where(factors < 0, math.pi, 0.0)
        if wec_positions is not None:
            k = self.omega**2 / GRAVITY
            for i, (x, y) in enumerate(np.asarray(wec_positions, float)):
                ph[:, 3 + i] -= k * (x * math.cos(beta) + y * math.sin(beta))
        return ExcitationCoeffTable(self.omega, mag, ph)

    @classmethod
    def synthetic(cls, gains, corner, phase0, delay, omega=None) -> "ExcitationCoeffTable":
        """Smooth low-pass magnitudes with linear phase.

        |f_i(w)| = gains_i / sqrt(1 + (w / corner_i)^4),
        arg f_i(w) = phase0_i - delay_i * w.
        """
        w = np.linspace(0.05, 4.0, 80) if omega is None else np.asarray(omega, float)
        g, wc = np.asarray(gains, float), np.asarray(corner, float)
        mag = g / np.sqrt(1.0 + (w[:, None] / wc) ** 4)
        ph = np.asarray(phase0, float) - np.asarray(delay, float) * w[:, None]
        return cls(w, mag, ph)

    def to_csv(self, path) -> None:
        header = (["omega"] + [f"f_mag_{i + 1}" for i in range(N_DOF)]
                  + [f"f_phase_{i + 1}" for i in range(N_DOF)])
        with open(path, "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(header)
            for k in range(self.omega.size):
                row = [self.omega[k], *self.magnitude[k], *self.phase[k]]
                wr.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "ExcitationCoeffTable":
        expected = (["omega"] + [f"f_mag_{i + 1}" for i in range(N_DOF)]
                    + [f"f_phase_{i + 1}" for i in range(N_DOF)])
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        if not rows or [h.strip() for h in rows[0]] != expected:
            raise IngestionError(f"{path}: header must be {','.join(expected)}")
        try:
            data = np.array([[float(v) for v in r] for r in rows[1:] if r], float)
        except ValueError as exc:
            raise IngestionError(f"{path}: non-numeric cell ({exc})") from None
        if data.ndim != 2 or data.shape[1] != len(expected):
            raise IngestionError(f"{path}: expected {len(expected)} columns")
        if np.any(np.diff(data[:, 0]) <= 0):
            raise IngestionError(f"{path}: omega column must be strictly increasing")
        try:
            return cls(data[:, 0], data[:, 1:1 + N_DOF], data[:, 1 + N_DOF:])
        except ParameterError as exc:
            raise IngestionError(f"{path}: {exc}") from None


def _component_coefficients(components: WaveComponentSet, table: ExcitationCoeffTable):
    mag, ph = table.evaluate(components.omega)
    amp = components.amplitude[:, None] * mag          # (n, 6)
    psi = components.phase[:, None] + ph                # (n, 6)
    return amp * np.cos(psi), amp * np.sin(psi)


def excitation_forces(components: WaveComponentSet, table: ExcitationCoeffTable, t) -> np.ndarray:
    """Excitation on all six modes at times ``t``; returns (len(t), 6)."""
    t = np.atleast_1d(np.asarray(t, float))
    a_cos, a_sin = _component_coefficients(components, table)
    out = np.empty((t.size, N_DOF))
    for sl in _chunks(t.size):
        arg = np.outer(t[sl], components.omega)
        out[sl] = np.cos(arg) @ a_cos - np.sin(arg) @ a_sin
    return out


def excitation_force(components: WaveComponentSet, table: ExcitationCoeffTable,
                     dof: int, t) -> Union[float, np.ndarray]:
    """Excitation on mode ``dof`` (0-based) at time(s) ``t``."""
    mag, ph = table.evaluate(components.omega)
    t_arr = np.atleast_1d(np.asarray(t, float))
    arg = np.outer(t_arr, components.omega) + components.phase + ph[:, dof]
    f = np.cos(arg) @ (components.amplitude * mag[:, dof])
    return float(f[0]) if np.ndim(t) == 0 else f


# --------------------------------------------------------------------------
# Wind
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WindSpec:
    mean_speed: float
    turbulence_intensity: float = 0.0
    heading: float = 0.0
    seed: int = 0
    mode: str = "steady"
    correlation_time: float = 10.0
    sample_dt: float = 0.1

    def __post_init__(self):
        if self.mean_speed < 0:
            raise ParameterError("mean wind speed must be non-negative")
        if not 0.0 <= self.turbulence_intensity < 1.0:
            raise ParameterError("turbulence intensity must lie in [0, 1)")
        if self.mode not in ("steady", "turbulent"):
            raise ParameterError(f"unknown wind mode {self.mode!r}")
        if self.correlation_time <= 0 or self.sample_dt <= 0:
            raise ParameterError("correlation_time and sample_dt must be positive")


class WindField:
    """Wind speed history for a given spec, sampled on a uniform grid.

    Between grid points the speed follows a cubic spline through the samples,
    so aerodynamic loads stay smooth at the integrator scale.  The samples
    are generated sequentially from the seed, so a longer field has the
    shorter one as its prefix.
    """

    def __init__(self, spec: WindSpec, duration: float):
        self.spec = spec
        n = int(math.ceil(duration / spec.sample_dt)) + 2
        self.t = np.arange(n) * spec.sample_dt
        sigma = spec.turbulence_intensity * spec.mean_speed
        if spec.mode == "steady" or sigma == 0.0:
            self.v = np.full(n, float(spec.mean_speed))
            self._spline = None
            return
        a = math.exp(-spec.sample_dt / spec.correlation_time)
        xi = np.random.default_rng(spec.seed).standard_normal(n)
        dev = np.empty(n)
        dev[0] = sigma * xi[0]
        b = sigma * math.sqrt(1.0 - a * a)
        for k in range(1, n):
            dev[k] = a * dev[k - 1] + b * xi[k]
        self.v = spec.mean_speed + dev
        self._spline = CubicSpline(self.t, self.v, bc_type="natural")

    def __call__(self, t):
        if self._spline is None:
            return np.full(np.shape(t), float(self.spec.mean_speed)) if np.ndim(t) else float(self.spec.mean_speed)
        return self._spline(t)


def wind_speed(spec: WindSpec, t):
    """Wind speed at time(s) ``t`` (seconds from the start of the record)."""
    t_max = float(np.max(t)) if np.ndim(t) else float(t)
    field_ = WindField(spec, max(t_max, spec.sample_dt))
    v = field_(t)
    return float(v) if np.ndim(t) == 0 else v


@dataclass(frozen=True)
class AeroDrag:
    """Rotor drag stand-in: thrust = 1/2 rho Cd A v_rel |v_rel| at hub height."""

    Cd: float = 0.8
    area: float = math.pi * 63.0**2
    air_density: float = 1.225
    hub_height: float = 90.0

    def __post_init__(self):
        if self.Cd <= 0 or self.area <= 0 or self.air_density <= 0:
            raise ParameterError("Cd, area and air density must be positive")


def relative_wind(v_wind, state, hub_height: float):
    state = np.asarray(state, float)
    return v_wind - (state[..., 1] + hub_height * state[..., 3])


def aero_force(v_wind, platform_state, drag: AeroDrag) -> Tuple[float, float]:
    """(surge force [N], pitch moment [N m]) from the drag stand-in."""
    v_rel = relative_wind(v_wind, platform_state, drag.hub_height)
    f = 0.5 * drag.air_density * drag.Cd * drag.area * v_rel * np.abs(v_rel)
    return f, f * drag.hub_height


def aero_force_linear(v_wind, platform_state, drag: AeroDrag, v_ref: float) -> Tuple[float, float]:
    """Drag linearized about the relative speed ``v_ref``:
    v|v| ~ |v_ref| (2 v - v_ref)."""
    v_rel = relative_wind(v_wind, platform_state, drag.hub_height)
    f = 0.5 * drag.air_density * drag.Cd * drag.area * abs(v_ref) * (2.0 * v_rel - v_ref)
    return f, f * drag.hub_height
