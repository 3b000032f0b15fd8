"""
Command-line interface: ``windwave-id <verb> ...``.

Verbs
-----
simulate       truth simulation of a preset, written as dataset CSV + JSON
estimate       filtered or gradient estimation on a dataset
evaluate       resimulate with an estimated theta and score it
sweep          simulate/estimate/evaluate over cases and headings
fit-radiation  fit state-space realizations to sampled kernels
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys
from pathlib import Path

import numpy as np

from windwave_id import config as cf
from windwave_id import model as mc
from windwave_id import pipeline as pl
from windwave_id.errors import ValidationError, WindWaveError
from windwave_id.hydroforces import fit_radiation_kernel, kernel_fit_residual, load_kernel_csv
from windwave_id.simulator import CHANNELS, export_dataset, import_dataset, sidecar_path

log = logging.getLogger("windwave_id")


def _guard(path: Path, force: bool) -> None:
    """Refuse to overwrite an existing file or non-empty directory."""
    if path.is_dir():
        if any(path.iterdir()) and not force:
            raise ValidationError(f"{path} exists and is not empty; use --force to overwrite")
    elif path.exists() and not force:
        raise ValidationError(f"{path} exists; use --force to overwrite")


def _config_for(args, dataset=None) -> dict:
    """Explicit preset, else the configuration embedded in the dataset."""
    scenario = getattr(args, "scenario", None)
    embedded = dataset.metadata.get("config") if dataset is not None else None
    if scenario is None and isinstance(embedded, dict):
        cfg = cf.deep_merge(embedded, cf.read_config_file(args.config) if args.config else {})
        cf.validate_config(cfg)
        return cfg
    return cf.load_config(scenario, args.config)


def cmd_simulate(args) -> int:
    cfg = cf.load_config(args.scenario, args.config)
    out = Path(args.out or f"{cfg['scenario']['id']}.csv")
    _guard(out, args.force)
    _guard(sidecar_path(out), args.force)
    ds = pl.simulate(cfg, seed=args.seed)
    ds.metadata["config"] = cfg
    out.parent.mkdir(parents=True, exist_ok=True)
    export_dataset(ds, out)
    print(f"wrote {out} ({ds.n} samples, dt = {ds.dt:g} s, duration = {ds.t[-1]:g} s)")
    print("channels: " + ", ".join(CHANNELS))
    return 0


def cmd_estimate(args) -> int:
    ds = import_dataset(args.dataset)
    cfg = _config_for(args, ds)
    out = Path(args.out or f"{Path(args.dataset).stem}_{args.estimator}")
    _guard(out, args.force)
    res = pl.estimate(ds, cfg, args.estimator)
    out.mkdir(parents=True, exist_ok=True)
    mc.save_theta(out / "theta.json", res.theta_hat, pl.theta_metadata(ds, args.estimator, res))
    if args.estimator == "filtered":
        res.report.to_csv(out / "convergence.csv")
        print(f"final lambda_min(P) = {res.report.lambda_min[-1]:.4g}")
        if not res.report.excitation_ok:
            print("warning: regressor not persistently exciting over the final window")
    else:
        _write_baseline_trace(out / "convergence.csv", res)
    if ds.theta_true is not None:
        print(f"final relative error = {res.final_error(ds.theta_true):.4g}")
    print(f"wrote {out / 'theta.json'}")
    return 0


def _write_baseline_trace(path, res) -> None:
    e = np.linalg.norm(res.prediction_error, axis=1)
    data = np.column_stack([res.t_trace, e, res.frobenius_error])
    np.savetxt(path, data, delimiter=",", header="t,prediction_error,frobenius_error",
               comments="", fmt="%.17g")


def cmd_evaluate(args) -> int:
    theta, meta = mc.load_theta(args.theta)
    ds = import_dataset(args.dataset)
    pl.check_compatible(meta, ds)
    cfg = _config_for(args, ds)
    out = Path(args.out or f"{Path(args.dataset).stem}_evaluation")
    _guard(out, args.force)
    ev = pl.evaluate(theta, ds, cfg)
    out.mkdir(parents=True, exist_ok=True)
    ev.report.to_csv(out / "report.csv")
    if not args.no_plots:
        from windwave_id.plotting import plot_comparison
        plot_comparison(ev, out, prefix="comparison")
    for name, m in ev.report.modes.items():
        print(f"{name:6s} MAPE = {m.mape:8.4f} %   R2 = {m.r_square:.6f}")
    print(f"wrote {out / 'report.csv'}")
    if ev.divergence:
        print(f"error: {ev.divergence}; metrics cover the completed horizon only",
              file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    out = Path(args.out or "sweep")
    _guard(out, args.force)
    outcomes = pl.sweep(args.scenarios, args.headings, out, seed=args.seed,
                        config_path=args.config, method=args.estimator, plots=args.plots)
    failed = [o for o in outcomes if o.status != "ok"]
    for o in outcomes:
        line = f"{o.scenario:10s} {o.heading:5g} deg  {o.status}"
        if o.evaluation is not None:
            worst = max(o.evaluation.report.modes[m].mape for m in pl.SUMMARY_MODES)
            line += f"  theta error {o.theta_error:.3g}  worst MAPE {worst:.3g} %"
        print(line)
    for o in failed:
        print(f"error: {o.scenario} at {o.heading:g} deg: {o.message}", file=sys.stderr)
    print(f"wrote {out / 'summary.csv'}")
    return 1 if failed else 0


def cmd_fit_radiation(args) -> int:
    out = Path(args.out or f"{Path(args.kernels).stem}_fit.json")
    _guard(out, args.force)
    t, samples = load_kernel_csv(args.kernels)
    fits = []
    for (i, k), K in sorted(samples.items()):
        kr = fit_radiation_kernel(t, K, args.order)
        resid = kernel_fit_residual(kr, t, K)
        peak = float(np.max(np.abs(K))) or 1.0
        fits.append({"i": i + 1, "k": k + 1, "order": kr.order, "A": kr.A.tolist(),
                     "B": kr.B.tolist(), "C": kr.C.tolist(), "rms_residual": resid,
                     "relative_residual": resid / peak})
        print(f"K_{i + 1}_{k + 1}: order {kr.order}, RMS residual {resid / peak:.3g} of peak")
    with open(out, "w") as f:
        json.dump({"schema": "windwave_id.radiation_fit/1", "kernels": fits}, f, indent=2)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="global seed replacing preset wave/wind seeds")
    common.add_argument("--config", default=None, help="JSON configuration file")
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="windwave-id", description=__doc__.split("\n\n")[0].strip())
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run a truth simulation")
    s.add_argument("scenario", nargs="?", default=None,
                   help=f"preset id ({', '.join(cf.available_presets())})")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", parents=[common], help="estimate theta from a dataset")
    e.add_argument("dataset")
    e.add_argument("--estimator", choices=pl.ESTIMATORS, default="filtered")
    e.add_argument("--scenario", default=None, help="preset supplying estimator settings")
    e.set_defaults(func=cmd_estimate)

    v = sub.add_parser("evaluate", parents=[common], help="score a theta against a dataset")
    v.add_argument("theta")
    v.add_argument("dataset")
    v.add_argument("--scenario", default=None, help="preset supplying evaluation settings")
    v.add_argument("--no-plots", action="store_true")
    v.set_defaults(func=cmd_evaluate)

    w = sub.add_parser("sweep", parents=[common], help="run cases over headings")
    w.add_argument("--scenarios", nargs="*", default=list(cf.CASE_IDS))
    w.add_argument("--headings", nargs="*", type=float, default=[30.0])
    w.add_argument("--estimator", choices=pl.ESTIMATORS, default="filtered")
    w.add_argument("--plots", action="store_true", help="write per-case SVG plots")
    w.set_defaults(func=cmd_sweep)

    f = sub.add_parser("fit-radiation", parents=[common], help="fit kernels from a CSV")
    f.add_argument("kernels", help="CSV with columns t,K_<i>_<k>")
    f.add_argument("--order", type=int, default=4)
    f.set_defaults(func=cmd_fit_radiation)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    print("# windwave-id " + " ".join(shlex.quote(a) for a in argv))
    try:
        return args.func(args)
    except WindWaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
