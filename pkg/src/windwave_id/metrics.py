"""
Fidelity statistics between a candidate trace and a reference trace.

All functions are pure.  Standard deviations use population normalization
(divide by N) since the traces are complete records.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from windwave_id.errors import DimensionError, MetricError, ParameterError

MODES = ("surge", "pitch", "heave", "wec1", "wec2", "wec3")
REPORT_COLUMNS = ("scenario", "mode", "n_samples", "rms_ref", "rms_candidate", "std_error",
                  "mean_error", "mape", "mape_excluded", "r_square", "complete")


def _series(x, name="series") -> np.ndarray:
    a = np.asarray(x, float)
    if a.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional")
    if a.size == 0:
        raise DimensionError(f"{name} is empty")
    return a


def _pair(candidate, reference, min_len=1):
    c = _series(candidate, "candidate")
    r = _series(reference, "reference")
    if c.shape != r.shape:
        raise DimensionError(f"length mismatch: {c.size} vs {r.size}")
    if c.size < min_len:
        raise DimensionError(f"need at least {min_len} samples")
    return c, r


def rms(series) -> float:
    """Root mean square of a non-empty series."""
    a = _series(series)
    return float(np.sqrt(np.mean(a * a)))


def error_stats(candidate, reference) -> tuple:
    """(mean, population std) of candidate - reference."""
    c, r = _pair(candidate, reference, min_len=2)
    e = c - r
    return float(np.mean(e)), float(np.std(e))


def mape_details(candidate, reference, floor_ratio: float = 1e-3) -> tuple:
    """MAPE in percent and the fraction of samples excluded by the floor.

    Samples with ``|ref| <= floor_ratio * max|ref|`` are dropped.
    """
    c, r = _pair(candidate, reference)
    if not 0.0 < floor_ratio < 1.0:
        raise ParameterError("floor_ratio must lie in (0, 1)")
    mag = np.abs(r)
    keep = mag > floor_ratio * mag.max()
    if not np.any(keep):
        raise MetricError("MAPE undefined: every reference sample is below the floor")
    value = 100.0 * float(np.mean(np.abs(c[keep] - r[keep]) / mag[keep]))
    return value, 1.0 - float(np.count_nonzero(keep)) / r.size


def mape(candidate, reference, floor_ratio: float = 1e-3) -> float:
    """Mean absolute percentage error over samples above the relative floor."""
    return mape_details(candidate, reference, floor_ratio)[0]


def r_square(candidate, reference) -> float:
    """1 - SS_res / SS_tot with SS_tot about the reference mean."""
    c, r = _pair(candidate, reference)
    ss_tot = float(np.sum((r - r.mean()) ** 2))
    if ss_tot <= 0.0:
        raise MetricError("R-square undefined: reference has zero variance")
    return 1.0 - float(np.sum((c - r) ** 2)) / ss_tot


@dataclass
class ModeStats:
    rms_ref: float
    rms_candidate: float
    std_error: float
    mean_error: float
    mape: float
    mape_excluded: float
    r_square: float


@dataclass
class FidelityReport:
    """Per-mode statistics for one scenario.

    ``complete`` is False when the candidate only covers part of the record
    (for example after a resimulation blow-up); the statistics then refer
    to the covered prefix.
    """

    scenario: str
    n_samples: int
    modes: Dict[str, ModeStats] = field(default_factory=dict)
    complete: bool = True
    note: str = ""

    def rows(self):
        for name, m in self.modes.items():
            yield {"scenario": self.scenario, "mode": name, "n_samples": self.n_samples,
                   "rms_ref": m.rms_ref, "rms_candidate": m.rms_candidate,
                   "std_error": m.std_error, "mean_error": m.mean_error, "mape": m.mape,
                   "mape_excluded": m.mape_excluded, "r_square": m.r_square,
                   "complete": int(self.complete)}

    def to_csv(self, path, append: bool = False) -> None:
        write_report_rows(path, self.rows(), append=append)


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_report_rows(path, rows, append: bool = False) -> None:
    """Write rows with the fixed ``REPORT_COLUMNS`` header."""
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not append:
            w.writerow(REPORT_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in REPORT_COLUMNS])


def read_report(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def mode_stats(candidate, reference, floor_ratio: float = 1e-3) -> ModeStats:
    mean_e, std_e = error_stats(candidate, reference)
    mp, excl = mape_details(candidate, reference, floor_ratio)
    return ModeStats(rms_ref=rms(reference), rms_candidate=rms(candidate), std_error=std_e,
                     mean_error=mean_e, mape=mp, mape_excluded=excl,
                     r_square=r_square(candidate, reference))


def fidelity_report(scenario: str, candidate, reference, floor_ratio: float = 1e-3,
                    offset: Optional[np.ndarray] = None) -> FidelityReport:
    """Compare (N, 6) displacement traces mode by mode.

    ``offset`` is subtracted from both traces first (the static equilibrium,
    so heave is measured as motion about its rest position).  A shorter
    candidate is compared on the common prefix and flagged incomplete.
    """
    c = np.asarray(candidate, float)
    r = np.asarray(reference, float)
    if c.ndim != 2 or r.ndim != 2 or c.shape[1] != len(MODES) or r.shape[1] != len(MODES):
        raise DimensionError("traces must be (N, 6) displacement arrays")
    n = min(c.shape[0], r.shape[0])
    complete = c.shape[0] >= r.shape[0]
    if offset is not None:
        off = np.asarray(offset, float)
        c = c - off
        r = r - off
    rep = FidelityReport(scenario=scenario, n_samples=n, complete=complete)
    for j, name in enumerate(MODES):
        rep.modes[name] = mode_stats(c[:n, j], r[:n, j], floor_ratio)
    return rep
