"""
Static SVG line charts of candidate versus reference traces.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from windwave_id.metrics import MODES  # noqa: E402

UNITS = {"surge": "m", "pitch": "rad", "heave": "m", "wec1": "rad", "wec2": "rad", "wec3": "rad"}


def _save(fig, path: Path) -> None:
    # fixed salt and no date keep the bytes reproducible
    with matplotlib.rc_context({"svg.hashsalt": "windwave-id"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_comparison(evaluation, out_dir, prefix: str = "run") -> list:
    """One SVG per mode; returns the written paths."""
    out_dir = Path(out_dir)
    t = evaluation.t
    n = len(t)
    paths = []
    for j, mode in enumerate(MODES):
        fig, ax = plt.subplots(figsize=(8, 3))
        ax.plot(t, evaluation.reference[:n, j], lw=1.0, label="reference")
        ax.plot(t, evaluation.candidate[:n, j], lw=1.0, ls="--", label="estimated model")
        ax.set_xlabel("time [s]")
        ax.set_ylabel(f"{mode} [{UNITS[mode]}]")
        ax.legend(loc="upper right", fontsize=8)
        fig.tight_layout()
        path = out_dir / f"{prefix}_{mode}.svg"
        _save(fig, path)
        paths.append(path)
    return paths


def plot_convergence(report, path) -> Path:
    """Relative parameter error and lambda_min(P) against time."""
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    a1.semilogy(report.t, report.frobenius_error)
    a1.set_ylabel("relative error")
    a2.semilogy(report.t, report.lambda_min.clip(min=1e-16))
    a2.set_ylabel("lambda_min(P)")
    a2.set_xlabel("time [s]")
    fig.tight_layout()
    path = Path(path)
    _save(fig, path)
    return path
