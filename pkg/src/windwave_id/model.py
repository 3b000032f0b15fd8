"""
Control-oriented 6-DOF model of the hybrid platform.

Generalized coordinates
-----------------------
    q1 platform surge [m], q2 platform pitch [rad], q3 platform heave [m],
    q4..q6 pitch of WEC 1..3 [rad].

State and regressor
-------------------
    X   = [q1, q1', q2, q2', q3, q3', q4, q4', q5, q5', q6, q6']   (12,)
    U   = [0, F1, 0, F2, 0, F3, 0, F4, 0, F5, 0, F6]               (12,)
    Phi = [X, U, 1]                                                (25,)

    X' = theta @ Phi,    theta = [A | B | H]  (12 x 25)

Rows 0, 2, ..., 10 of ``theta`` (0-based) are the kinematic identities
q_i' = q_i'.  Rows 1, 3, ..., 11 carry the 33 named coefficients.  Named
coefficients keep the sign convention of the published block matrices, so
the value stored in ``theta`` is ``sign * coefficient`` (for example the
surge stiffness slot holds ``-s1``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from windwave_id.errors import DimensionError, IngestionError, ParameterError, StructureError

N_DOF = 6
N_STATE = 12
N_REG = 2 * N_STATE + 1
CONST_COL = N_REG - 1

# mask codes
FIXED_ZERO = 0
ESTIMATED = 1
FIXED_ONE = 2

STRUCTURE_TOL = 1e-12


@dataclass(frozen=True)
class ModeLayout:
    """Index bookkeeping for states, inputs and regressor columns."""

    dof_names: Tuple[str, ...] = ("surge", "pitch", "heave", "wec1", "wec2", "wec3")

    @property
    def n_state(self) -> int:
        return 2 * len(self.dof_names)

    @property
    def n_regressor(self) -> int:
        return 2 * self.n_state + 1

    def disp(self, dof: int) -> int:
        """State index of the displacement of ``dof`` (0-based)."""
        return 2 * dof

    def vel(self, dof: int) -> int:
        """State index of the velocity of ``dof`` (0-based)."""
        return 2 * dof + 1

    def force_col(self, dof: int) -> int:
        """Regressor column carrying the lumped force on ``dof``."""
        return self.n_state + 2 * dof + 1

    @property
    def state_names(self) -> Tuple[str, ...]:
        names = []
        for d in self.dof_names:
            names += [d, d + "_rate"]
        return tuple(names)


LAYOUT = ModeLayout()

# (name, row, column, sign).  Rows/columns are 0-based theta positions.
_PLATFORM_SLOTS = [
    ("s1", 1, 0, -1.0), ("s2", 1, 1, -1.0), ("s3", 1, LAYOUT.force_col(0), 1.0),
    ("p3", 3, 0, -1.0), ("p4", 3, 1, -1.0), ("p1", 3, 2, -1.0), ("p2", 3, 3, -1.0),
    ("p5", 3, LAYOUT.force_col(1), 1.0),
    ("h1", 5, 4, -1.0), ("h2", 5, 5, -1.0), ("h3", 5, LAYOUT.force_col(2), 1.0),
    ("h4", 5, CONST_COL, 1.0),
]


def _wec_slots(prefix: str, dof: int):
    row = LAYOUT.vel(dof)
    cols = [0, 1, 2, 3, LAYOUT.disp(dof), LAYOUT.vel(dof)]
    slots = [(f"{prefix}{i + 1}", row, c, -1.0) for i, c in enumerate(cols)]
    slots.append((f"{prefix}7", row, LAYOUT.force_col(dof), 1.0))
    return slots


PARAM_SLOTS = tuple(
    _PLATFORM_SLOTS + _wec_slots("l", 3) + _wec_slots("j", 4) + _wec_slots("w", 5)
)
PARAM_NAMES = tuple(s[0] for s in PARAM_SLOTS)
PARAM_FAMILIES = {"s": "surge", "p": "pitch", "h": "heave", "l": "wec1", "j": "wec2", "w": "wec3"}

# sparsity of the damping/stiffness matrices: (row, col) pairs allowed nonzero
COUPLING_PATTERN = (
    (0, 0), (1, 0), (1, 1), (2, 2),
    (3, 0), (3, 1), (3, 3),
    (4, 0), (4, 1), (4, 4),
    (5, 0), (5, 1), (5, 5),
)


def standard_mask() -> np.ndarray:
    """Structure mask of the control-oriented model (12 x 25, int8 codes)."""
    mask = np.full((N_STATE, N_REG), FIXED_ZERO, dtype=np.int8)
    for dof in range(N_DOF):
        mask[LAYOUT.disp(dof), LAYOUT.vel(dof)] = FIXED_ONE
    for _, r, c, _ in PARAM_SLOTS:
        mask[r, c] = ESTIMATED
    return mask


def _named_from_matrices(M, B, R, C3) -> Dict[str, float]:
    out = {
        "s1": R[0, 0] / M[0], "s2": B[0, 0] / M[0], "s3": 1.0 / M[0],
        "p1": R[1, 1] / M[1], "p2": B[1, 1] / M[1], "p3": R[1, 0] / M[1],
        "p4": B[1, 0] / M[1], "p5": 1.0 / M[1],
        "h1": R[2, 2] / M[2], "h2": B[2, 2] / M[2], "h3": 1.0 / M[2], "h4": -C3 / M[2],
    }
    for prefix, i in (("l", 3), ("j", 4), ("w", 5)):
        m = M[i]
        out.update({
            f"{prefix}1": R[i, 0] / m, f"{prefix}2": B[i, 0] / m,
            f"{prefix}3": R[i, 1] / m, f"{prefix}4": B[i, 1] / m,
            f"{prefix}5": R[i, i] / m, f"{prefix}6": B[i, i] / m,
            f"{prefix}7": 1.0 / m,
        })
    return {k: float(v) for k, v in out.items()}


@dataclass
class SystemParameters:
    """Generalized masses, damping/stiffness matrices and heave constant.

    ``M`` holds the six diagonal generalized masses (any infinite-frequency
    added mass already included when the parameters describe a simulated
    plant).  ``B`` and ``R`` must follow ``COUPLING_PATTERN``.
    """

    M: np.ndarray
    B: np.ndarray
    R: np.ndarray
    C3: float = 0.0

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=float).reshape(-1)
        self.B = np.asarray(self.B, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.C3 = float(self.C3)
        if self.M.shape != (N_DOF,):
            raise DimensionError(f"M must have {N_DOF} entries, got {self.M.shape}")
        for name in ("B", "R"):
            if getattr(self, name).shape != (N_DOF, N_DOF):
                raise DimensionError(f"{name} must be {N_DOF}x{N_DOF}")
        if not np.all(np.isfinite(self.M)) or np.any(self.M <= 0.0):
            raise ParameterError(f"generalized masses must be positive, got {self.M}")
        allowed = np.zeros((N_DOF, N_DOF), dtype=bool)
        for r, c in COUPLING_PATTERN:
            allowed[r, c] = True
        for name in ("B", "R"):
            mat = getattr(self, name)
            if np.any(mat[~allowed] != 0.0):
                raise ParameterError(f"{name} has entries outside the coupling pattern")

    @property
    def named(self) -> Dict[str, float]:
        return _named_from_matrices(self.M, self.B, self.R, self.C3)

    @classmethod
    def from_named(cls, named: Mapping[str, float]) -> "SystemParameters":
        missing = [n for n in PARAM_NAMES if n not in named]
        if missing:
            raise ParameterError(f"missing named coefficients: {missing}")
        inv = [named["s3"], named["p5"], named["h3"], named["l7"], named["j7"], named["w7"]]
        if any(not np.isfinite(v) or v <= 0.0 for v in inv):
            raise ParameterError("inverse-mass coefficients (s3, p5, h3, l7, j7, w7) must be positive")
        M = 1.0 / np.array(inv)
        B = np.zeros((N_DOF, N_DOF))
        R = np.zeros((N_DOF, N_DOF))
        R[0, 0], B[0, 0] = named["s1"] * M[0], named["s2"] * M[0]
        R[1, 1], B[1, 1] = named["p1"] * M[1], named["p2"] * M[1]
        R[1, 0], B[1, 0] = named["p3"] * M[1], named["p4"] * M[1]
        R[2, 2], B[2, 2] = named["h1"] * M[2], named["h2"] * M[2]
        C3 = -named["h4"] * M[2]
        for prefix, i in (("l", 3), ("j", 4), ("w", 5)):
            m = M[i]
            R[i, 0], B[i, 0] = named[f"{prefix}1"] * m, named[f"{prefix}2"] * m
            R[i, 1], B[i, 1] = named[f"{prefix}3"] * m, named[f"{prefix}4"] * m
            R[i, i], B[i, i] = named[f"{prefix}5"] * m, named[f"{prefix}6"] * m
        return cls(M=M, B=B, R=R, C3=C3)

    def with_added_mass(self, added) -> "SystemParameters":
        """Copy with ``added`` (6-vector) added to the generalized masses."""
        return SystemParameters(self.M + np.asarray(added, dtype=float), self.B.copy(),
                                self.R.copy(), self.C3)

    def to_dict(self) -> dict:
        return {
            "M": self.M.tolist(),
            "B": self.B.tolist(),
            "R": self.R.tolist(),
            "C3": self.C3,
            "named": self.named,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SystemParameters":
        if "M" in d:
            return cls(M=d["M"], B=d["B"], R=d["R"], C3=d.get("C3", 0.0))
        return cls.from_named(d["named"])


@dataclass
class ThetaMatrix:
    """Parameter matrix ``theta = [A | B | H]`` with its structure mask."""

    values: np.ndarray
    mask: np.ndarray = field(default_factory=standard_mask)

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        self.mask = np.array(self.mask, dtype=np.int8)
        if self.values.shape != self.mask.shape:
            raise DimensionError(
                f"values {self.values.shape} and mask {self.mask.shape} differ in shape")

    @property
    def estimated(self) -> np.ndarray:
        return self.mask == ESTIMATED

    @property
    def A(self) -> np.ndarray:
        m = self.values.shape[0]
        return self.values[:, :m]

    @property
    def B(self) -> np.ndarray:
        m = self.values.shape[0]
        return self.values[:, m:2 * m]

    @property
    def H(self) -> np.ndarray:
        return self.values[:, -1]

    def structure_violation(self) -> float:
        """Largest deviation of a fixed entry from its prescribed value."""
        zero = np.abs(self.values[self.mask == FIXED_ZERO])
        one = np.abs(self.values[self.mask == FIXED_ONE] - 1.0)
        return float(max(zero.max(initial=0.0), one.max(initial=0.0)))

    def check_structure(self, tol: float = STRUCTURE_TOL) -> None:
        v = self.structure_violation()
        if v > tol:
            raise StructureError(f"fixed entry deviates by {v:.3e} (> {tol:g})")

    def named(self) -> Dict[str, float]:
        """Named coefficients read from their slots (standard layout only)."""
        return {n: float(s * self.values[r, c]) for n, r, c, s in PARAM_SLOTS}

    def estimated_vector(self) -> np.ndarray:
        return self.values[self.estimated]

    def copy(self) -> "ThetaMatrix":
        return ThetaMatrix(self.values.copy(), self.mask.copy())

    def to_dict(self, metadata: Mapping | None = None) -> dict:
        d = {
            "schema": "windwave_id.theta/1",
            "values": self.values.tolist(),
            "mask": self.mask.tolist(),
        }
        if self.values.shape == (N_STATE, N_REG):
            d["named"] = self.named()
        if metadata:
            d["metadata"] = dict(metadata)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ThetaMatrix":
        if "values" in d:
            return cls(d["values"], d.get("mask", standard_mask()))
        return assemble_theta(SystemParameters.from_named(d["named"]))


def input_vector(forces) -> np.ndarray:
    """Arrange six lumped generalized forces into the 12-entry input layout.

    Accepts shape (6,) or (N, 6) and returns (12,) or (N, 12).
    """
    f = np.asarray(forces, dtype=float)
    if f.shape[-1] != N_DOF:
        raise DimensionError(f"expected {N_DOF} forces, got shape {f.shape}")
    u = np.zeros(f.shape[:-1] + (N_STATE,))
    u[..., 1::2] = f
    return u


def build_regressor(X, U) -> np.ndarray:
    """Regressor ``[X, U, 1]``; works on single samples or (N, 12) stacks."""
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    if X.shape[-1] != N_STATE or U.shape[-1] != N_STATE or X.shape != U.shape:
        raise DimensionError(f"X {X.shape} and U {U.shape} must both end in {N_STATE}")
    ones = np.ones(X.shape[:-1] + (1,))
    return np.concatenate([X, U, ones], axis=-1)


def assemble_theta(params: SystemParameters) -> ThetaMatrix:
    """Build ``theta`` from physical parameters (exact layout of the model)."""
    if np.any(params.M <= 0.0):
        raise ParameterError("generalized masses must be positive")
    values = np.zeros((N_STATE, N_REG))
    for dof in range(N_DOF):
        values[LAYOUT.disp(dof), LAYOUT.vel(dof)] = 1.0
    named = params.named
    for name, r, c, sign in PARAM_SLOTS:
        values[r, c] = sign * named[name]
    return ThetaMatrix(values, standard_mask())


def params_from_theta(theta: ThetaMatrix, tol: float = STRUCTURE_TOL) -> SystemParameters:
    """Inverse of :func:`assemble_theta`; raises StructureError on mask violations."""
    if theta.values.shape != (N_STATE, N_REG):
        raise DimensionError(f"theta must be {N_STATE}x{N_REG}")
    theta.check_structure(tol)
    return SystemParameters.from_named(theta.named())


def state_derivative(theta: ThetaMatrix, X, U) -> np.ndarray:
    """``X' = theta @ Phi(X, U)`` for one sample or an (N, 12) stack."""
    phi = build_regressor(X, U)
    return phi @ theta.values.T


def save_theta(path, theta: ThetaMatrix, metadata: Mapping | None = None) -> None:
    with open(path, "w") as f:
        json.dump(theta.to_dict(metadata), f, indent=2)


def load_theta(path) -> Tuple[ThetaMatrix, dict]:
    """Read a theta JSON file; returns (theta, metadata).

    Raises
    ------
    IngestionError
        If the file is missing, not JSON, or lacks the theta fields.
    """
    try:
        with open(path) as f:
            d = json.load(f)
    except OSError as exc:
        raise IngestionError(f"cannot read theta file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(d, dict) or not ("values" in d or "named" in d):
        raise IngestionError(f"{path}: expected a 'values' or 'named' entry")
    return ThetaMatrix.from_dict(d), d.get("metadata", {})
