"""
Hydrodynamic and mechanical force models of the truth plant.

Radiation follows the Cummins form with the infinite-frequency added mass
moved into the generalized mass, so only the fluid-memory convolution is
evaluated here.  Each kernel K_ik(t) is realized as a small stable
state-space system driven by the velocity of mode k:

    x_r' = A_r x_r + B_r v_k,      (K_ik * v_k)(t) ~ C_r x_r(t)
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from windwave_id.errors import (
    ConfigurationError,
    FitError,
    IngestionError,
    ModeError,
    ParameterError,
)

N_DOF = 6
HEAVE = 2


# --------------------------------------------------------------------------
# Radiation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelRealization:
    """State-space triple (A, B, C) of one retardation kernel."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, float))
        n = A.shape[0]
        B = np.asarray(self.B, float).reshape(n)
        C = np.asarray(self.C, float).reshape(n)
        if A.shape != (n, n):
            raise ParameterError("kernel A matrix must be square")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def is_hurwitz(self) -> bool:
        return bool(np.all(np.linalg.eigvals(self.A).real < 0.0))

    def impulse_response(self, t) -> np.ndarray:
        """C exp(A t) B on the given times."""
        t = np.atleast_1d(np.asarray(t, float))
        lam, V = np.linalg.eig(self.A)
        if np.linalg.cond(V) < 1e8:
            left = self.C @ V
            right = np.linalg.solve(V, self.B)
            return np.real(np.exp(np.outer(t, lam)) @ (left * right))
        return np.array([self.C @ expm(self.A * s) @ self.B for s in t])

    @classmethod
    def damped_oscillator(cls, k0: float, beta: float, omega0: float) -> "KernelRealization":
        """Exact realization of K(t) = k0 exp(-beta t) cos(omega0 t)."""
        A = np.array([[-beta, -omega0], [omega0, -beta]])
        return cls(A, [1.0, 0.0], [k0, 0.0])


@dataclass
class RadiationModel:
    """Infinite-frequency added mass plus fluid-memory realizations.

    ``kernels`` maps 0-based (i, k) couplings to realizations; the memory
    force on mode i is -sum_k C_ik x_ik.  ``x`` stacks all kernel states in
    the sorted order of ``kernels`` and is advanced by
    :func:`radiation_force_step`.
    """

    A_inf: np.ndarray
    kernels: Dict[Tuple[int, int], KernelRealization] = field(default_factory=dict)

    def __post_init__(self):
        A_inf = np.asarray(self.A_inf, float)
        if A_inf.ndim == 1:
            A_inf = np.diag(A_inf)
        if A_inf.shape != (N_DOF, N_DOF):
            raise ConfigurationError("A_inf must be 6x6 (or a 6-vector diagonal)", "radiation.A_inf")
        if not np.allclose(A_inf, A_inf.T, rtol=0, atol=1e-9 * max(1.0, np.abs(A_inf).max())):
            raise ConfigurationError("A_inf must be symmetric", "radiation.A_inf")
        if np.linalg.eigvalsh(A_inf).min() < -1e-9 * max(1.0, np.abs(A_inf).max()):
            raise ConfigurationError("A_inf must be positive semi-definite", "radiation.A_inf")
        self.A_inf = A_inf
        self.kernels = dict(sorted(self.kernels.items()))
        for (i, k), kr in self.kernels.items():
            if not (0 <= i < N_DOF and 0 <= k < N_DOF):
                raise ConfigurationError(f"coupling ({i}, {k}) out of range", "radiation.kernels")
            if not kr.is_hurwitz():
                raise ConfigurationError(
                    f"kernel ({i + 1},{k + 1}) state matrix is not Hurwitz", "radiation.kernels")
        self._build()
        self.reset()

    def _build(self):
        n = sum(kr.order for kr in self.kernels.values())
        self.n_states = n
        self.A_big = np.zeros((n, n))
        self.B_big = np.zeros((n, N_DOF))
        self.C_big = np.zeros((N_DOF, n))
        pos = 0
        for (i, k), kr in self.kernels.items():
            sl = slice(pos, pos + kr.order)
            self.A_big[sl, sl] = kr.A
            self.B_big[sl, k] = kr.B
            self.C_big[i, sl] = kr.C
            pos += kr.order
        self._disc_cache = {}

    def reset(self) -> None:
        self.x = np.zeros(self.n_states)

    def derivative(self, x_r: np.ndarray, velocities: np.ndarray) -> np.ndarray:
        return self.A_big @ x_r + self.B_big @ velocities

    def memory_force(self, x_r: np.ndarray) -> np.ndarray:
        """-sum_k C_ik x_ik for each mode (6,)."""
        return -(self.C_big @ x_r)

    def discrete(self, dt: float) -> Tuple[np.ndarray, np.ndarray]:
        """Zero-order-hold discretization (Ad, Bd) of the stacked states."""
        if dt not in self._disc_cache:
            n, m = self.n_states, N_DOF
            big = np.zeros((n + m, n + m))
            big[:n, :n] = self.A_big * dt
            big[:n, n:] = self.B_big * dt
            E = expm(big)
            self._disc_cache[dt] = (E[:n, :n], E[:n, n:])
        return self._disc_cache[dt]


def radiation_force_step(model: RadiationModel, velocities, dt: float) -> np.ndarray:
    """Advance the memory states over ``dt`` with velocities held; return the
    memory force at the end of the step (added-mass term excluded)."""
    if dt <= 0:
        raise ParameterError("dt must be positive")
    v = np.asarray(velocities, float).reshape(N_DOF)
    Ad, Bd = model.discrete(float(dt))
    model.x = Ad @ model.x + Bd @ v
    return model.memory_force(model.x)


# --------------------------------------------------------------------------
# Kernel identification
# --------------------------------------------------------------------------


def _realize(poles: np.ndarray, t: np.ndarray, K: np.ndarray) -> KernelRealization:
    """Least-squares residues for the given poles; real block realization."""
    blocks = []      # (kind, sigma, omega)
    basis = []
    for s in poles:
        if abs(s.imag) < 1e-12:
            blocks.append(("r", s.real, 0.0))
            basis.append(np.exp(s.real * t))
        elif s.imag > 0:
            blocks.append(("c", s.real, s.imag))
            env = np.exp(s.real * t)
            basis += [env * np.cos(s.imag * t), env * np.sin(s.imag * t)]
    Phi = np.column_stack(basis)
    coef, *_ = np.linalg.lstsq(Phi, K, rcond=None)
    n = len(coef)
    A, B, C = np.zeros((n, n)), np.zeros(n), np.zeros(n)
    pos = 0
    for kind, sig, om in blocks:
        if kind == "r":
            A[pos, pos], B[pos], C[pos] = sig, 1.0, coef[pos]
            pos += 1
        else:
            A[pos:pos + 2, pos:pos + 2] = [[sig, -om], [om, sig]]
            B[pos] = 1.0
            C[pos:pos + 2] = coef[pos:pos + 2]
            pos += 2
    return KernelRealization(A, B, C)


def fit_radiation_kernel(t, K, order: int) -> KernelRealization:
    """Fit a stable order-``order`` realization to uniformly sampled K(t).

    Poles come from linear prediction (Prony) on the samples; unstable
    discrete roots are reflected into the stable half plane.  Residues are
    then fitted by linear least squares for the fixed poles.

    Raises
    ------
    FitError
        If the realization is not Hurwitz after projection; the exception
        carries the RMS reconstruction residual.
    """
    t = np.asarray(t, float).reshape(-1)
    K = np.asarray(K, float).reshape(-1)
    if order < 1:
        raise ParameterError("order must be >= 1")
    if t.size != K.size or t.size < 2 * order + 1:
        raise ParameterError(f"need at least {2 * order + 1} samples for order {order}")
    dt = t[1] - t[0]
    if dt <= 0 or np.any(np.abs(np.diff(t) - dt) > 1e-9 * max(1.0, abs(dt))):
        raise ParameterError("kernel samples must lie on a uniform increasing grid")
    peak = np.abs(K).max()
    if peak == 0.0:
        return KernelRealization(-np.eye(order), np.ones(order), np.zeros(order))

    n = order
    rows = K.size - n
    H = np.column_stack([K[i:i + rows] for i in range(n)])
    a, *_ = np.linalg.lstsq(H, -K[n:n + rows], rcond=None)
    z = np.roots(np.concatenate([[1.0], a[::-1]]))
    z = np.where(np.abs(z) < 1e-12, 1e-12, z)
    # a lone negative real root has no conjugate partner; keep its decay only
    neg_real = (np.abs(z.imag) < 1e-12) & (z.real < 0)
    s = np.where(neg_real, np.log(np.abs(z)) / dt + 0j, np.log(z.astype(complex)) / dt)
    s = np.where(s.real >= 0.0, -np.abs(s.real) - 1e-6 + 1j * s.imag, s)
    # snap conjugate pairs so the realization is exactly real
    s = np.where(np.abs(s.imag) < 1e-9, s.real + 0j, s)
    real_kernel = _realize(s, t, K)
    resid = float(np.sqrt(np.mean((real_kernel.impulse_response(t) - K) ** 2)))
    if not real_kernel.is_hurwitz() or not np.all(np.isfinite(real_kernel.C)):
        raise FitError("kernel fit is not Hurwitz after stability projection", resid)
    return real_kernel


def kernel_fit_residual(kr: KernelRealization, t, K) -> float:
    """RMS reconstruction error of ``kr`` on the samples."""
    return float(np.sqrt(np.mean((kr.impulse_response(t) - np.asarray(K, float)) ** 2)))


def load_kernel_csv(path) -> Tuple[np.ndarray, Dict[Tuple[int, int], np.ndarray]]:
    """Read ``t,K_<i>_<k>`` columns (1-based modes); returns (t, {(i, k): K})."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise IngestionError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[0] != "t" or len(header) < 2:
        raise IngestionError(f"{path}: header must start with t followed by K_<i>_<k> columns")
    keys = []
    for col, name in enumerate(header[1:], start=1):
        parts = name.split("_")
        if len(parts) != 3 or parts[0] != "K" or not (parts[1].isdigit() and parts[2].isdigit()):
            raise IngestionError(f"{path}: column {col} ({name!r}) is not of the form K_<i>_<k>")
        i, k = int(parts[1]) - 1, int(parts[2]) - 1
        if not (0 <= i < N_DOF and 0 <= k < N_DOF):
            raise IngestionError(f"{path}: column {name!r} refers to a mode outside 1..6")
        keys.append((i, k))
    data = []
    for r, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise IngestionError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        try:
            data.append([float(v) for v in row])
        except ValueError:
            raise IngestionError(f"{path}: row {r} has a non-numeric cell") from None
    arr = np.array(data)
    if arr.shape[0] < 3:
        raise IngestionError(f"{path}: need at least 3 samples")
    if not np.all(np.isfinite(arr)):
        raise IngestionError(f"{path}: non-finite values")
    dts = np.diff(arr[:, 0])
    if np.any(dts <= 0) or np.any(np.abs(dts - dts[0]) > 1e-9 * max(1.0, dts[0])):
        raise IngestionError(f"{path}: t column is not a uniform increasing grid")
    return arr[:, 0], {key: arr[:, j + 1] for j, key in enumerate(keys)}


def save_kernel_csv(path, t, kernels: Mapping[Tuple[int, int], np.ndarray]) -> None:
    keys = sorted(kernels)
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["t"] + [f"K_{i + 1}_{k + 1}" for i, k in keys])
        for j, tj in enumerate(np.asarray(t, float)):
            wr.writerow([repr(float(tj))] + [repr(float(kernels[key][j])) for key in keys])


# --------------------------------------------------------------------------
# Hydrostatics, mooring, PTO
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HydrostaticModel:
    rho: float = 1025.0
    g: float = 9.81
    V: float = 13917.0
    C_hydro: np.ndarray = field(default_factory=lambda: np.zeros((N_DOF, N_DOF)))

    def __post_init__(self):
        if self.rho <= 0 or self.g <= 0 or self.V <= 0:
            raise ParameterError("rho, g and V must be positive")
        C = np.asarray(self.C_hydro, float)
        if C.ndim == 1:
            C = np.diag(C)
        if C.shape != (N_DOF, N_DOF):
            raise ParameterError("C_hydro must be 6x6 (or a 6-vector diagonal)")
        if np.any(np.diag(C)[1:] < 0):
            raise ParameterError("heave and pitch restoring coefficients must be non-negative")
        object.__setattr__(self, "C_hydro", C)

    @property
    def buoyancy(self) -> float:
        return self.rho * self.g * self.V


def hydrostatic_force(model: HydrostaticModel, q) -> np.ndarray:
    """rho g V on heave minus the linear restoring C_hydro q."""
    q = np.asarray(q, float)
    f = -(q @ model.C_hydro.T)
    f[..., HEAVE] += model.buoyancy
    return f


@dataclass(frozen=True)
class MooringModel:
    """Linearized mooring on the three platform modes."""

    R_m: np.ndarray = field(default_factory=lambda: np.zeros(3))
    B_m: np.ndarray = field(default_factory=lambda: np.zeros(3))
    c: float = 0.0

    def __post_init__(self):
        R = np.broadcast_to(np.asarray(self.R_m, float), (3,)).copy()
        B = np.broadcast_to(np.asarray(self.B_m, float), (3,)).copy()
        if np.any(R < 0) or np.any(B < 0):
            raise ParameterError("mooring stiffness and damping must be non-negative")
        object.__setattr__(self, "R_m", R)
        object.__setattr__(self, "B_m", B)


def mooring_force(model: MooringModel, mode: int, q, qd):
    """Mooring force on platform mode ``mode`` (1 surge, 2 pitch, 3 heave)."""
    if mode not in (1, 2, 3):
        raise ModeError(f"mooring acts on platform modes 1..3 only, got {mode}")
    f = -model.R_m[mode - 1] * q - model.B_m[mode - 1] * qd
    return f + model.c if mode == 3 else f


def mooring_forces(model: MooringModel, q, qd) -> np.ndarray:
    """All six mooring components; WEC modes get none."""
    q = np.asarray(q, float)
    qd = np.asarray(qd, float)
    f = np.zeros(q.shape)
    f[..., :3] = -model.R_m * q[..., :3] - model.B_m * qd[..., :3]
    f[..., 2] += model.c
    return f


@dataclass(frozen=True)
class PtoModel:
    K_PTO: float = 0.0
    B_PTO: float = 2e8

    def __post_init__(self):
        if self.K_PTO < 0 or self.B_PTO < 0:
            raise ParameterError("PTO stiffness and damping must be non-negative")


def pto_force(model: PtoModel, q_r, qd_r, u=0.0):
    """-K q_r - B q_r' - u."""
    return -model.K_PTO * q_r - model.B_PTO * qd_r - u


@dataclass(frozen=True)
class JointKinematics:
    """Small-angle hinge geometry of the three arms.

    The platform rotation seen at hinge i is

        q_s,i = cos(psi_i) q2 + (q3 - q3_ref) / r_i

    with r_i the arm radius and psi_i its heading; platform pitch projects on
    the arm plane and heave relative to the reference draft tilts the arm.
    """

    radius: np.ndarray = field(default_factory=lambda: np.full(3, 28.8))
    heading_deg: np.ndarray = field(default_factory=lambda: np.array([120.0, 240.0, 0.0]))
    q3_ref: float = 0.0

    def __post_init__(self):
        r = np.broadcast_to(np.asarray(self.radius, float), (3,)).copy()
        h = np.broadcast_to(np.asarray(self.heading_deg, float), (3,)).copy()
        if np.any(r <= 0):
            raise ParameterError("arm radius must be positive")
        object.__setattr__(self, "radius", r)
        object.__setattr__(self, "heading_deg", h)

    @property
    def jacobian(self) -> np.ndarray:
        """(3, 6) map from generalized coordinates to hinge platform angles."""
        J = np.zeros((3, N_DOF))
        J[:, 1] = np.cos(np.radians(self.heading_deg))
        J[:, 2] = 1.0 / self.radius
        return J

    @property
    def positions(self) -> np.ndarray:
        """Hinge positions (x, y) in metres."""
        psi = np.radians(self.heading_deg)
        return np.column_stack([self.radius * np.cos(psi), self.radius * np.sin(psi)])

    def platform_angle(self, platform_q, wec_index: int) -> float:
        q = np.asarray(platform_q, float)
        psi = math.radians(self.heading_deg[wec_index])
        return math.cos(psi) * q[1] + (q[2] - self.q3_ref) / self.radius[wec_index]


def relative_rotation(kin: JointKinematics, platform_q, wec_q: float, wec_index: int,
                      platform_qd=None, wec_qd: float = 0.0) -> Tuple[float, float]:
    """(q_r, q_r') = (q_s - q_w, q_s' - q_w') for arm ``wec_index`` (0-based)."""
    if not 0 <= wec_index < 3:
        raise ModeError(f"wec_index must be 0, 1 or 2, got {wec_index}")
    q_s = kin.platform_angle(platform_q, wec_index)
    if platform_qd is None:
        qd_s = 0.0
    else:
        qd = np.asarray(platform_qd, float)
        psi = math.radians(kin.heading_deg[wec_index])
        qd_s = math.cos(psi) * qd[1] + qd[2] / kin.radius[wec_index]
    return q_s - wec_q, qd_s - wec_qd


def pto_generalized_forces(kin: JointKinematics, torque) -> np.ndarray:
    """Generalized forces (6,) of hinge torques acting on q_r = q_s - q_w.

    By virtual work the platform sees J^T tau and WEC i sees -tau_i.
    """
    tau = np.asarray(torque, float)
    f = tau @ kin.jacobian
    f[..., 3:] -= tau
    return f
