"""
End-to-end runs: simulate -> estimate -> resimulate -> evaluate, and sweeps.
"""

from __future__ import annotations

import copy
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Mapping, Optional, Sequence

import numpy as np

from windwave_id import config as cf
from windwave_id import metrics as mt
from windwave_id import model as mc
from windwave_id.errors import DivergenceError, MetricError, ValidationError, WindWaveError
from windwave_id.estimation import (
    BaselineConfig,
    EstimatorConfig,
    estimate_run,
    gain_matrix,
    gradient_baseline_run,
)
from windwave_id.simulator import SimDataset, resimulate, run_truth

log = logging.getLogger(__name__)

DISPLACEMENT_ROWS = list(range(0, mc.N_STATE, 2))
SUMMARY_MODES = ("surge", "pitch", "heave")
SUMMARY_COLUMNS = ("scenario", "heading", "mode", "status", "rms_ref", "rms_candidate",
                   "std_error", "mean_error", "mape", "r_square", "theta_error")
ESTIMATORS = ("filtered", "gradient")


def estimator_config(cfg: Mapping) -> EstimatorConfig:
    mode, g = cf.gamma_spec(cfg)
    e = cfg["estimator"]
    return EstimatorConfig(Gamma=gain_matrix(mode, g), k=float(e["k"]), ell=float(e["ell"]),
                           integrator=e["integrator"], normalize=bool(e["normalize"]),
                           compensate_initial=bool(e["compensate_initial"]),
                           report_every=int(e["report_every"]), window=float(e["window"]))


def baseline_config(cfg: Mapping) -> BaselineConfig:
    mode, g = cf.baseline_spec(cfg)
    b = cfg["baseline"]
    return BaselineConfig(G=gain_matrix(mode, g), L=float(b["L"]),
                          normalize=bool(b.get("normalize", True)),
                          report_every=int(cfg["estimator"]["report_every"]))


def with_heading(cfg: Mapping, heading: float) -> dict:
    out = copy.deepcopy(dict(cfg))
    out["scenario"]["heading"] = float(heading)
    return out


def simulate(cfg: Mapping, seed: Optional[int] = None) -> SimDataset:
    plant = cf.build_plant(cfg)
    scenario = cf.build_scenario(cfg)
    sim = cf.build_simulation(cfg, seed=seed)
    meta = {"heading": scenario.heading, "wec_status": scenario.wec_status,
            "equilibrium_heave": float(cfg["plant"]["equilibrium_heave"]),
            "description": scenario.description,
            "wind_speed": scenario.wind.mean_speed,
            "wave_type": cfg["scenario"]["waves"].get("type", "none")}
    for key in ("Hs", "Tp"):
        if key in cfg["scenario"]["waves"]:
            meta[key] = cfg["scenario"]["waves"][key]
    return run_truth(plant, scenario, sim, metadata=meta)


def estimate(dataset: SimDataset, cfg: Mapping, method: str = "filtered"):
    """Run one estimator; returns its result object."""
    if method == "filtered":
        return estimate_run(dataset, estimator_config(cfg))
    if method == "gradient":
        return gradient_baseline_run(dataset, baseline_config(cfg))
    raise ValidationError(f"unknown estimator {method!r}; choose from {', '.join(ESTIMATORS)}")


def theta_metadata(dataset: SimDataset, method: str, result=None) -> dict:
    meta = {"method": method, "dt": dataset.dt, "n_samples": dataset.n,
            "scenario_id": dataset.metadata.get("scenario_id"),
            "equilibrium_heave": dataset.metadata.get("equilibrium_heave")}
    ref = dataset.theta_true
    if ref is not None and result is not None:
        meta["final_error"] = float(result.final_error(ref))
    return meta


def check_compatible(theta_meta: Mapping, dataset: SimDataset) -> None:
    """Reject a theta estimated on a different sample grid."""
    dt = theta_meta.get("dt")
    if dt is not None and abs(float(dt) - dataset.dt) > 1e-9 * dataset.dt:
        raise ValidationError(f"theta was estimated at dt = {dt} s but the dataset has "
                              f"dt = {dataset.dt} s")


@dataclass
class Evaluation:
    report: mt.FidelityReport
    candidate: np.ndarray
    reference: np.ndarray
    t: np.ndarray
    divergence: Optional[str] = None


def equilibrium_offset(dataset: SimDataset) -> np.ndarray:
    off = np.zeros(mc.N_DOF)
    z = dataset.metadata.get("equilibrium_heave")
    if z is not None:
        off[2] = float(z)
    return off


def evaluate(theta: mc.ThetaMatrix, dataset: SimDataset, cfg: Mapping,
             scenario_id: Optional[str] = None) -> Evaluation:
    """Resimulate with ``theta`` under the dataset's inputs and score it.

    A blow-up during resimulation yields a report over the completed
    prefix, flagged incomplete.
    """
    ev = cfg["evaluation"]
    sid = scenario_id or dataset.metadata.get("scenario_id") or "dataset"
    note = None
    try:
        Xc = resimulate(theta, dataset.U, dataset.X[0], dataset.dt, hold=ev["hold"])
    except DivergenceError as exc:
        Xc = exc.partial
        note = str(exc)
    ref = dataset.X[:, DISPLACEMENT_ROWS]
    cand = Xc[:, DISPLACEMENT_ROWS]
    if cand.shape[0] < 2:
        raise MetricError(f"{sid}: resimulation failed immediately ({note})")
    rep = mt.fidelity_report(sid, cand, ref, floor_ratio=float(ev["floor_ratio"]),
                             offset=equilibrium_offset(dataset))
    if note:
        rep.note = note
    return Evaluation(rep, cand, ref, dataset.t[:cand.shape[0]], note)


@dataclass
class CaseOutcome:
    scenario: str
    heading: float
    status: str
    evaluation: Optional[Evaluation] = None
    theta_error: float = float("nan")
    message: str = ""
    files: List[Path] = field(default_factory=list)
    dataset: Optional[SimDataset] = None
    result: object = None


def run_case(cfg: Mapping, seed: Optional[int] = None, method: str = "filtered",
             out_dir: Optional[Path] = None, plots: bool = False,
             keep: bool = False) -> CaseOutcome:
    """simulate -> estimate -> evaluate for one resolved configuration.

    ``keep`` attaches the dataset and estimator result to the outcome.
    """
    sid = cfg["scenario"]["id"]
    heading = float(cfg["scenario"]["heading"])
    tag = f"{sid}_h{heading:g}"
    try:
        ds = simulate(cfg, seed)
        res = estimate(ds, cfg, method)
        err = res.final_error(ds.theta_true) if ds.theta_true is not None else float("nan")
        evaluation = evaluate(res.theta_hat, ds, cfg, scenario_id=tag)
    except WindWaveError as exc:
        log.warning("%s failed: %s", tag, exc)
        return CaseOutcome(sid, heading, "failed", message=str(exc))
    status = "ok" if evaluation.divergence is None else "partial"
    out = CaseOutcome(sid, heading, status, evaluation, theta_error=float(err),
                      message=evaluation.divergence or "")
    if keep:
        out.dataset, out.result = ds, res
    if out_dir is not None:
        out_dir = Path(out_dir)
        path = out_dir / f"{tag}_report.csv"
        evaluation.report.to_csv(path)
        out.files.append(path)
        if plots:
            from windwave_id.plotting import plot_comparison
            out.files.extend(plot_comparison(evaluation, out_dir, prefix=tag))
    return out


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def summary_rows(outcomes: Sequence[CaseOutcome]) -> list:
    rows = []
    for o in outcomes:
        for mode in SUMMARY_MODES:
            row = {"scenario": o.scenario, "heading": o.heading, "mode": mode,
                   "status": o.status, "theta_error": o.theta_error}
            if o.evaluation is not None:
                m = o.evaluation.report.modes[mode]
                row.update(rms_ref=m.rms_ref, rms_candidate=m.rms_candidate,
                           std_error=m.std_error, mean_error=m.mean_error, mape=m.mape,
                           r_square=m.r_square)
            else:
                row.update({k: float("nan") for k in ("rms_ref", "rms_candidate", "std_error",
                                                      "mean_error", "mape", "r_square")})
            rows.append(row)
    return rows


def write_summary(path, outcomes: Sequence[CaseOutcome]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in summary_rows(outcomes):
            w.writerow([_fmt(row[k]) for k in SUMMARY_COLUMNS])


def sweep(scenarios: Sequence[str], headings: Sequence[float], out_dir, seed: Optional[int] = None,
          config_path=None, method: str = "filtered", plots: bool = False,
          keep: bool = False) -> list:
    """Run every (scenario, heading) pair; failures are recorded, not raised.

    Writes ``summary.csv`` plus one report per combination into ``out_dir``.
    """
    if not scenarios:
        raise ValidationError("sweep needs at least one scenario")
    if not headings:
        raise ValidationError("sweep needs at least one heading")
    # resolve every configuration up front so typos fail before any run
    cfgs = [cf.load_config(s, config_path) for s in scenarios]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outcomes = []
    for cfg in cfgs:
        for h in headings:
            log.info("running %s at %g deg", cfg["scenario"]["id"], h)
            outcomes.append(run_case(with_heading(cfg, h), seed=seed, method=method,
                                     out_dir=out_dir, plots=plots, keep=keep))
    write_summary(out_dir / "summary.csv", outcomes)
    return outcomes
