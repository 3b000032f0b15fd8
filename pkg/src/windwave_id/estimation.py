"""
Online estimation of the parameter matrix theta in X' = theta Phi.

Filtered estimation-error law
-----------------------------
    k X_f' + X_f = X,            k Phi_f' + Phi_f = Phi,     X_f(0) = Phi_f(0) = 0
    P' = -ell P + Phi_f Phi_f^T,  Q' = -ell Q + [(X - X_f)/k] Phi_f^T
    W  = theta_hat P - Q  (= -theta_tilde P for consistent data)
    theta_hat' = -Gamma o W

Gradient baseline
-----------------
    x_hat' = theta_hat Phi(x) + L (x - x_hat)
    theta_hat' = G o (e Phi^T) / (1 + Phi^T Phi),   e = x - x_hat

Both laws act only on the estimated entries of the structure mask.  The
run functions work in normalized coordinates: regressor column j is divided
by its RMS over the record, so theta_w = theta * s and gains, P, Q and V
are all expressed for theta_w.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from windwave_id import model as mc
from windwave_id.errors import DivergenceError, ParameterError

# --------------------------------------------------------------------------
# Filters
# --------------------------------------------------------------------------


def foh_coefficients(tau: float, dt: float) -> Tuple[float, float, float]:
    """(a, b0, b1) of the exact first-order-hold step of tau y' + y = u.

    y(t + dt) = a y(t) + b0 u(t) + b1 u(t + dt) for u linear over the step.
    """
    if tau <= 0 or dt <= 0:
        raise ParameterError("time constant and dt must be positive")
    r = dt / tau
    a = math.exp(-r)
    # 1 - (1 - a)/r loses precision for tiny r; use the series there
    if r < 1e-4:
        b1 = r / 2.0 - r * r / 6.0
    else:
        b1 = 1.0 - (1.0 - a) / r
    b0 = (1.0 - a) - b1
    return a, b0, b1


@dataclass
class FilterState:
    """First-order filters of X and Phi with zero initial outputs.

    ``X_in``/``Phi_in`` hold the latest inputs so consecutive samples can be
    joined by a first-order hold; they are ``None`` before the first sample.
    """

    k: float
    X_f: np.ndarray
    Phi_f: np.ndarray
    X_in: Optional[np.ndarray] = None
    Phi_in: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.k <= 0:
            raise ParameterError(f"filter time constant must be positive, got {self.k}")

    @classmethod
    def zeros(cls, k: float, n_state: int = mc.N_STATE, n_reg: int = mc.N_REG) -> "FilterState":
        return cls(k, np.zeros(n_state), np.zeros(n_reg))


def filter_step(fs: FilterState, X, Phi, dt: float, hold: str = "foh") -> FilterState:
    """Advance both filters over ``dt`` to the new sample (X, Phi).

    With ``hold="foh"`` the input is taken linear between the previous and
    the new sample; ``"zoh"`` holds the previous sample.  The first call only
    records the inputs (outputs stay at their zero initial value).
    """
    X = np.asarray(X, float)
    Phi = np.asarray(Phi, float)
    if fs.X_in is None:
        return FilterState(fs.k, fs.X_f.copy(), fs.Phi_f.copy(), X.copy(), Phi.copy())
    a, b0, b1 = foh_coefficients(fs.k, dt)
    if hold == "zoh":
        b0, b1 = 1.0 - a, 0.0
    elif hold != "foh":
        raise ParameterError(f"hold must be 'foh' or 'zoh', got {hold!r}")
    X_f = a * fs.X_f + b0 * fs.X_in + b1 * X
    Phi_f = a * fs.Phi_f + b0 * fs.Phi_in + b1 * Phi
    return FilterState(fs.k, X_f, Phi_f, X.copy(), Phi.copy())


def implicit_derivative(fs: FilterState, X, k: Optional[float] = None) -> np.ndarray:
    """(X - X_f) / k, the acceleration-free surrogate of theta Phi_f."""
    k = fs.k if k is None else k
    return (np.asarray(X, float) - fs.X_f) / k


# --------------------------------------------------------------------------
# Auxiliary matrices
# --------------------------------------------------------------------------


@dataclass
class AuxiliaryState:
    ell: float
    P: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        if self.ell <= 0:
            raise ParameterError(f"forgetting factor must be positive, got {self.ell}")

    @classmethod
    def zeros(cls, ell: float, n_state: int = mc.N_STATE, n_reg: int = mc.N_REG) -> "AuxiliaryState":
        return cls(ell, np.zeros((n_reg, n_reg)), np.zeros((n_state, n_reg)))


def auxiliary_step(aux: AuxiliaryState, fs: FilterState, X, dt: float,
                   y: Optional[np.ndarray] = None) -> AuxiliaryState:
    """Exact step of P' = -ell P + Phi_f Phi_f^T and Q' = -ell Q + y Phi_f^T.

    The integrands are held at the filter state ``fs`` (end of step).  ``y``
    defaults to (X - X_f)/k.  P is symmetrized after the update.
    """
    if dt <= 0:
        raise ParameterError("dt must be positive")
    if y is None:
        y = implicit_derivative(fs, X)
    decay = math.exp(-aux.ell * dt)
    w = -math.expm1(-aux.ell * dt) / aux.ell
    phi = fs.Phi_f
    P = decay * aux.P + w * np.outer(phi, phi)
    P = 0.5 * (P + P.T)
    Q = decay * aux.Q + w * np.outer(y, phi)
    return AuxiliaryState(aux.ell, P, Q)


def compute_W(theta_hat, aux: AuxiliaryState) -> np.ndarray:
    """W = theta_hat P - Q."""
    th = theta_hat.values if isinstance(theta_hat, mc.ThetaMatrix) else np.asarray(theta_hat, float)
    return th @ aux.P - aux.Q


def adaptive_step(theta_hat, W, Gamma, mask, dt: float) -> np.ndarray:
    """Forward-Euler step theta_hat - dt Gamma o W on estimated entries only.

    ``Gamma`` is a scalar or an array broadcastable to theta's shape.
    """
    th = theta_hat.values if isinstance(theta_hat, mc.ThetaMatrix) else np.asarray(theta_hat, float)
    est = np.asarray(mask) == mc.ESTIMATED
    new = th.copy()
    G = np.broadcast_to(np.asarray(Gamma, float), th.shape)
    new[est] = th[est] - dt * G[est] * np.asarray(W)[est]
    if not np.all(np.isfinite(new)):
        raise DivergenceError("adaptive update produced non-finite values", float("nan"), th)
    return new


class ImplicitUpdater:
    """Backward-Euler step of theta_hat' = -Gamma o (theta_hat P - Q).

    Each row decouples: with S the estimated columns of row r and D the
    gains on S,

        (I + dt D P_SS) theta_S^+ = theta_S - dt D (theta_F P_FS - Q_S),

    which is unconditionally stable for positive gains and P >= 0.
    """

    def __init__(self, mask, Gamma, dt: float):
        mask = np.asarray(mask)
        est = mask == mc.ESTIMATED
        G = np.broadcast_to(np.asarray(Gamma, float), mask.shape)
        self.rows = [r for r in range(mask.shape[0]) if est[r].any()]
        self.S = [np.nonzero(est[r])[0] for r in self.rows]
        self.F = [np.nonzero(~est[r])[0] for r in self.rows]
        self.D = [G[r, s] for r, s in zip(self.rows, self.S)]
        self.m = max((len(s) for s in self.S), default=0)
        self.dt = dt

    def step(self, theta: np.ndarray, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
        n_rows, m, dt = len(self.rows), self.m, self.dt
        if n_rows == 0:
            return theta.copy()
        lhs = np.tile(np.eye(m), (n_rows, 1, 1))
        rhs = np.zeros((n_rows, m))
        for i, (r, S, F, D) in enumerate(zip(self.rows, self.S, self.F, self.D)):
            c = theta[r, F] @ P[np.ix_(F, S)] - Q[r, S]
            n = len(S)
            lhs[i, :n, :n] += dt * D[:, None] * P[np.ix_(S, S)]
            rhs[i, :n] = theta[r, S] - dt * D * c
        sol = np.linalg.solve(lhs, rhs[..., None])[..., 0]
        new = theta.copy()
        for i, (r, S) in enumerate(zip(self.rows, self.S)):
            new[r, S] = sol[i, :len(S)]
        return new


# --------------------------------------------------------------------------
# Gains
# --------------------------------------------------------------------------


REFERENCE_GAMMA = (0.23, 0.09, 0.12, 221, 500, 8, 310, 10, 10, 200, 2, 0.2, 200)
REFERENCE_G = (1000, 200, 1, 10, 10, 10, 10, 10, 10, 0.1, 1000, 1, 10)


def gain_matrix(mode: str, values, mask=None) -> np.ndarray:
    """Elementwise gain array (12 x 25) from a compact specification.

    ``scalar``: one gain everywhere.  ``family``: six gains, one per mode
    row (surge, pitch, heave, wec1..3).  ``row``: twelve gains, one per row
    of theta.  ``row_const``: the twelve row gains of ``row`` followed by a
    separate gain for the constant column.
    """
    v = np.atleast_1d(np.asarray(values, float))
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ParameterError("gains must be positive and finite")
    G = np.ones((mc.N_STATE, mc.N_REG))
    if mode == "scalar" and v.size == 1:
        G *= v[0]
    elif mode == "family" and v.size == 6:
        G *= np.repeat(v, 2)[:, None]
    elif mode == "row" and v.size == 12:
        G *= v[:, None]
    elif mode == "row_const" and v.size == 13:
        G *= v[:12, None]
        G[:, mc.CONST_COL] = v[12]
    else:
        raise ParameterError(f"gain mode {mode!r} cannot take {v.size} values")
    return G


# --------------------------------------------------------------------------
# Configuration and reports
# --------------------------------------------------------------------------


@dataclass
class EstimatorConfig:
    Gamma: np.ndarray
    k: float = 0.1
    ell: float = 0.001
    mask: np.ndarray = field(default_factory=mc.standard_mask)
    theta0: Optional[np.ndarray] = None
    integrator: str = "implicit"
    normalize: bool = True
    compensate_initial: bool = True
    report_every: int = 10
    window: float = 10.0
    pe_tol: float = 1e-9

    def __post_init__(self):
        self.Gamma = np.broadcast_to(np.asarray(self.Gamma, float), (mc.N_STATE, mc.N_REG)).copy()
        if np.any(self.Gamma[np.asarray(self.mask) == mc.ESTIMATED] <= 0):
            raise ParameterError("all gains on estimated entries must be positive")
        if self.k <= 0 or self.ell <= 0:
            raise ParameterError("k and ell must be positive")
        if self.integrator not in ("implicit", "explicit"):
            raise ParameterError("integrator must be 'implicit' or 'explicit'")
        if self.report_every < 1 or self.window <= 0:
            raise ParameterError("report_every must be >= 1 and window positive")


@dataclass
class BaselineConfig:
    G: np.ndarray
    L: float = 10.0
    mask: np.ndarray = field(default_factory=mc.standard_mask)
    x_hat0: Optional[np.ndarray] = None
    theta0: Optional[np.ndarray] = None
    normalize: bool = True
    report_every: int = 10

    def __post_init__(self):
        self.G = np.broadcast_to(np.asarray(self.G, float), (mc.N_STATE, mc.N_REG)).copy()
        if self.L <= 0:
            raise ParameterError("observer gain L must be positive")
        if np.any(self.G[np.asarray(self.mask) == mc.ESTIMATED] <= 0):
            raise ParameterError("learning gains must be positive")


@dataclass
class ConvergenceReport:
    """Monitor traces sampled every ``report_every`` samples.

    ``lambda_min``/``lambda_max`` are eigenvalues of P restricted to the
    regressor columns that are not identically zero; ``sigma`` is their
    running minimum over the trailing window and ``mu = 2 sigma min(Gamma)``.
    ``V`` and ``frobenius_error`` are NaN without a reference theta.
    """

    t: np.ndarray
    lambda_min: np.ndarray
    lambda_max: np.ndarray
    sigma: np.ndarray
    mu: np.ndarray
    V: np.ndarray
    frobenius_error: np.ndarray
    gamma_min: float
    excitation_ok: bool
    fitted_rate: float = float("nan")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(["t", "lambda_min_P", "lambda_max_P", "V", "frobenius_error"])
            for row in zip(self.t, self.lambda_min, self.lambda_max, self.V, self.frobenius_error):
                wr.writerow(["%.17g" % v for v in row])


@dataclass
class EstimationResult:
    theta_hat: mc.ThetaMatrix
    t_trace: np.ndarray           # report times
    trace: np.ndarray             # estimated-entry vectors at report times (physical units)
    report: ConvergenceReport
    scales: np.ndarray
    divergence: Optional[str] = None

    def final_error(self, theta_ref: mc.ThetaMatrix) -> float:
        return masked_relative_error(self.theta_hat, theta_ref)

    def tail_mean(self, seconds: float = 10.0) -> mc.ThetaMatrix:
        """Estimate averaged over the final ``seconds`` of the trace."""
        sel = self.t_trace >= self.t_trace[-1] - seconds
        th = self.theta_hat.copy()
        th.values[th.estimated] = self.trace[sel].mean(axis=0)
        return th


def masked_relative_error(theta_hat: mc.ThetaMatrix, theta_ref: mc.ThetaMatrix) -> float:
    est = theta_ref.estimated
    return float(np.linalg.norm(theta_hat.values[est] - theta_ref.values[est])
                 / np.linalg.norm(theta_ref.values[est]))


def regressor_scales(Phi: np.ndarray) -> np.ndarray:
    """RMS of each regressor column (1 for identically zero columns)."""
    s = np.sqrt(np.mean(np.asarray(Phi, float) ** 2, axis=0))
    return np.where(s > 0.0, s, 1.0)


def _active_columns(Phi: np.ndarray) -> np.ndarray:
    return np.nonzero(np.any(Phi != 0.0, axis=0))[0]


def _sliding_min(t: np.ndarray, v: np.ndarray, window: float) -> np.ndarray:
    out = np.empty_like(v)
    start = 0
    for i in range(len(v)):
        while t[start] < t[i] - window - 1e-12:
            start += 1
        out[i] = v[start:i + 1].min()
    return out


def _fit_rate(t, V):
    ok = np.isfinite(V) & (V > 0)
    if ok.sum() < 3:
        return float("nan")
    slope = np.polyfit(t[ok], np.log(V[ok]), 1)[0]
    return float(max(0.0, -slope))


# --------------------------------------------------------------------------
# Runs
# --------------------------------------------------------------------------


def _dataset_arrays(dataset):
    X = np.asarray(dataset.X, float)
    U = np.asarray(dataset.U, float)
    t = np.asarray(dataset.t, float)
    dt = float(t[1] - t[0])
    if np.any(np.abs(np.diff(t) - dt) > 1e-9 * max(1.0, abs(dt))):
        raise ParameterError("dataset grid is not uniform")
    return t, X, U, dt


def estimate_run(dataset, cfg: EstimatorConfig, theta_ref: Optional[mc.ThetaMatrix] = None
                 ) -> EstimationResult:
    """Run the filtered estimation-error law over a whole record.

    Per sample: filter_step -> auxiliary_step -> compute_W -> theta update.
    With ``compensate_initial`` the known filter start-up term
    X(0) exp(-t/k) / k is removed from (X - X_f)/k.

    Raises
    ------
    DivergenceError
        If the estimate becomes non-finite; ``partial`` carries the result
        assembled up to that point.
    """
    t, X, U, dt = _dataset_arrays(dataset)
    if theta_ref is None and getattr(dataset, "theta_true", None) is not None:
        theta_ref = dataset.theta_true
    mask = np.asarray(cfg.mask)
    est = mask == mc.ESTIMATED
    Phi = mc.build_regressor(X, U)
    s = regressor_scales(Phi) if cfg.normalize else np.ones(Phi.shape[1])
    Phi_w = Phi / s
    active = _active_columns(Phi)

    theta = np.zeros(mask.shape)
    theta[mask == mc.FIXED_ONE] = 1.0
    if cfg.theta0 is not None:
        theta[est] = np.asarray(cfg.theta0, float)[est]
    theta_w = theta * s
    ref_w = theta_ref.values * s if theta_ref is not None else None

    fs = filter_step(FilterState.zeros(cfg.k, X.shape[1], Phi.shape[1]), X[0], Phi_w[0], dt)
    aux = AuxiliaryState.zeros(cfg.ell, X.shape[1], Phi.shape[1])
    updater = ImplicitUpdater(mask, cfg.Gamma, dt) if cfg.integrator == "implicit" else None
    gmin = float(cfg.Gamma[est].min())

    rep_idx = list(range(0, len(t), cfg.report_every))
    if rep_idx[-1] != len(t) - 1:
        rep_idx.append(len(t) - 1)
    rep_set = set(rep_idx)
    lam_min, lam_max, Vs, errs, trace = [], [], [], [], []

    def record():
        Pa = aux.P[np.ix_(active, active)]
        ev = np.linalg.eigvalsh(Pa) if active.size else np.zeros(1)
        lam_min.append(ev[0])
        lam_max.append(ev[-1])
        phys = theta_w / s
        trace.append(phys[est].copy())
        if ref_w is not None:
            d = (theta_w - ref_w)[est]
            Vs.append(0.5 * np.sum(d * d / cfg.Gamma[est]))
            errs.append(np.linalg.norm((phys - theta_ref.values)[est])
                        / np.linalg.norm(theta_ref.values[est]))
        else:
            Vs.append(np.nan)
            errs.append(np.nan)

    x0_term = X[0] / cfg.k
    divergence = None
    n_done = len(t)
    record()
    for n in range(1, len(t)):
        fs = filter_step(fs, X[n], Phi_w[n], dt)
        y = implicit_derivative(fs, X[n])
        if cfg.compensate_initial:
            y = y - x0_term * math.exp(-t[n] / cfg.k)
        aux = auxiliary_step(aux, fs, X[n], dt, y=y)
        if updater is not None:
            new = updater.step(theta_w, aux.P, aux.Q)
        else:
            new = adaptive_step(theta_w, compute_W(theta_w, aux), cfg.Gamma, mask, dt)
        if not np.all(np.isfinite(new)):
            divergence = f"estimate became non-finite at t = {t[n]:.4g} s"
            n_done = n
            break
        theta_w = new
        if n in rep_set:
            record()

    t_rep = t[[i for i in rep_idx if i < n_done] or [0]][:len(lam_min)]
    lam_min = np.array(lam_min)
    lam_max = np.array(lam_max)
    sigma = _sliding_min(t_rep, lam_min, cfg.window)
    mu = 2.0 * np.maximum(sigma, 0.0) * gmin
    V = np.array(Vs)
    ok = bool(lam_min[-1] > cfg.pe_tol * max(lam_max[-1], 1e-300) and lam_min[-1] > 0)
    report = ConvergenceReport(t_rep, lam_min, lam_max, sigma, mu, V, np.array(errs), gmin, ok,
                               _fit_rate(t_rep, V))
    theta_hat = mc.ThetaMatrix(theta_w / s, mask.copy())
    theta_hat.values[~est] = np.where(mask[~est] == mc.FIXED_ONE, 1.0, 0.0)
    result = EstimationResult(theta_hat, t_rep, np.array(trace), report, s, divergence)
    if divergence:
        raise DivergenceError(divergence, float(t[n_done]), result)
    return result


@dataclass
class BaselineResult:
    theta_hat: mc.ThetaMatrix
    t_trace: np.ndarray
    trace: np.ndarray
    prediction_error: np.ndarray      # (n_report, 12) observer error e at report times
    frobenius_error: np.ndarray
    scales: np.ndarray

    def final_error(self, theta_ref: mc.ThetaMatrix) -> float:
        return masked_relative_error(self.theta_hat, theta_ref)


def gradient_baseline_run(dataset, cfg: BaselineConfig,
                          theta_ref: Optional[mc.ThetaMatrix] = None) -> BaselineResult:
    """Predictor-based normalized gradient estimator.

    The predictor is advanced exactly over each step as the first-order
    filter x_hat' = L (x + theta_hat Phi / L - x_hat) with first-order hold on
    the samples and theta_hat held; theta_hat then takes a forward-Euler
    step driven by the new prediction error.
    """
    t, X, U, dt = _dataset_arrays(dataset)
    if theta_ref is None and getattr(dataset, "theta_true", None) is not None:
        theta_ref = dataset.theta_true
    mask = np.asarray(cfg.mask)
    est = mask == mc.ESTIMATED
    Phi = mc.build_regressor(X, U)
    s = regressor_scales(Phi) if cfg.normalize else np.ones(Phi.shape[1])
    Phi_w = Phi / s
    theta = np.zeros(mask.shape)
    theta[mask == mc.FIXED_ONE] = 1.0
    if cfg.theta0 is not None:
        theta[est] = np.asarray(cfg.theta0, float)[est]
    theta_w = theta * s
    x_hat = X[0].copy() if cfg.x_hat0 is None else np.asarray(cfg.x_hat0, float).copy()
    a, b0, b1 = foh_coefficients(1.0 / cfg.L, dt)
    G = cfg.G

    rep_t, trace, errs, e_rep = [], [], [], []

    def record(n, e):
        phys = theta_w / s
        rep_t.append(t[n])
        trace.append(phys[est].copy())
        e_rep.append(e.copy())
        errs.append(np.nan if theta_ref is None else
                    np.linalg.norm((phys - theta_ref.values)[est]) / np.linalg.norm(theta_ref.values[est]))

    record(0, X[0] - x_hat)
    for n in range(1, len(t)):
        u0 = X[n - 1] + theta_w @ Phi_w[n - 1] / cfg.L
        u1 = X[n] + theta_w @ Phi_w[n] / cfg.L
        x_hat = a * x_hat + b0 * u0 + b1 * u1
        e = X[n] - x_hat
        phi = Phi_w[n]
        norm2 = 1.0 + phi @ phi
        upd = np.outer(e, phi) / norm2
        theta_w = theta_w.copy()
        theta_w[est] += dt * G[est] * upd[est]
        if not (np.all(np.isfinite(theta_w)) and np.all(np.isfinite(x_hat))):
            raise DivergenceError(f"gradient baseline diverged at t = {t[n]:.4g} s", float(t[n]),
                                  np.array(trace))
        if n % cfg.report_every == 0 or n == len(t) - 1:
            record(n, e)
    theta_hat = mc.ThetaMatrix(theta_w / s, mask.copy())
    theta_hat.values[~est] = np.where(mask[~est] == mc.FIXED_ONE, 1.0, 0.0)
    return BaselineResult(theta_hat, np.array(rep_t), np.array(trace), np.array(e_rep),
                          np.array(errs), s)


# --------------------------------------------------------------------------
# Diagnostics
# --------------------------------------------------------------------------


def decay_bound_violations(report: ConvergenceReport, t_start: float, every: float = 1.0,
                           slack: float = 1e-2):
    """Check V(t2) <= V(t1) exp(-mu (t2 - t1)) (1 + slack) on a 1 s lattice.

    For each pair t_start <= t1 < t2 the rate uses sigma = min lambda_min(P)
    over [t1, t2].  Returns (number of pairs, list of violating pairs).
    """
    t = report.t
    sel = [np.argmin(np.abs(t - tt)) for tt in np.arange(t_start, t[-1] + 1e-9, every)]
    sel = sorted(set(sel))
    lam = report.lambda_min
    bad = []
    pairs = 0
    for a_i, i in enumerate(sel):
        for j in sel[a_i + 1:]:
            sigma = max(lam[i:j + 1].min(), 0.0)
            mu = 2.0 * sigma * report.gamma_min
            bound = report.V[i] * math.exp(-mu * (t[j] - t[i])) * (1.0 + slack)
            pairs += 1
            if report.V[j] > bound:
                bad.append((float(t[i]), float(t[j]), float(report.V[j]), float(bound)))
    return pairs, bad


def identity_residual(dataset, cfg: EstimatorConfig, theta_ref: mc.ThetaMatrix,
                      t_check: float) -> dict:
    """Steps the filters and P/Q alone and evaluates invariants at ``t_check``.

    Returns the relative symmetry defect of P, the smallest eigenvalue of P,
    and W + (theta - theta_hat) P for theta_hat = 0 on estimated entries,
    normalized by ||P||_F ||theta - theta_hat||_F.
    """
    t, X, U, dt = _dataset_arrays(dataset)
    Phi = mc.build_regressor(X, U)
    s = regressor_scales(Phi) if cfg.normalize else np.ones(Phi.shape[1])
    Phi_w = Phi / s
    fs = filter_step(FilterState.zeros(cfg.k), X[0], Phi_w[0], dt)
    aux = AuxiliaryState.zeros(cfg.ell)
    n_stop = int(round(t_check / dt))
    sym = 0.0
    lam = np.inf
    bound_ratio = 0.0
    phi_max2 = 0.0
    for n in range(1, n_stop + 1):
        fs = filter_step(fs, X[n], Phi_w[n], dt)
        y = implicit_derivative(fs, X[n])
        if cfg.compensate_initial:
            y = y - X[0] / cfg.k * math.exp(-t[n] / cfg.k)
        aux = auxiliary_step(aux, fs, X[n], dt, y=y)
        nP = np.linalg.norm(aux.P)
        phi_max2 = max(phi_max2, float(fs.Phi_f @ fs.Phi_f))
        if nP > 0:
            sym = max(sym, np.linalg.norm(aux.P - aux.P.T) / nP)
            bound_ratio = max(bound_ratio, nP / (phi_max2 / cfg.ell))
        if n % 100 == 0:
            lam = min(lam, np.linalg.eigvalsh(aux.P)[0])
    theta_w = theta_ref.values * s
    theta_hat = theta_w.copy()
    theta_hat[theta_ref.estimated] = 0.0
    W = compute_W(theta_hat, aux)
    tilde = theta_w - theta_hat
    resid = np.linalg.norm(W + tilde @ aux.P) / (np.linalg.norm(aux.P) * np.linalg.norm(tilde))
    return {"symmetry": sym, "lambda_min": float(lam), "identity": float(resid),
            "bound_ratio": bound_ratio, "P": aux.P, "Q": aux.Q}
