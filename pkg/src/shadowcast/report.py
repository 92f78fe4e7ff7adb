"""Sweep outputs: CSV files, the run manifest, and rendered figures.

Floats are written with 17 significant digits so parsing the files
recovers every value exactly; figures are rendered from the same metrics
rows that go into metrics.csv.
"""

from __future__ import annotations

import csv
import datetime
import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .harness import MetricsRow, SweepPoint, TrialResult

METRICS_COLUMNS = [
    "sweep_var",
    "sweep_value",
    "grid_L",
    "estimator",
    "trials",
    "rmse_theta_m",
    "rmse_theta_stderr",
    "rmse_r_m",
    "rmse_r_stderr",
    "outage_prob",
    "outage_stderr",
]

TRIALS_COLUMNS = [
    "trial",
    "seed",
    "theta_true_x",
    "theta_true_y",
    "r_true",
    "theta_hat_x",
    "theta_hat_y",
    "r_hat",
    "n_blocked",
    "n_nonblocked",
    "outage",
    "alpha_final",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_metrics_csv(path, rows: Sequence[MetricsRow]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.sweep_var,
                    _fmt(r.sweep_value),
                    _fmt(r.grid_l),
                    r.estimator,
                    _fmt(r.trials),
                    _fmt(r.rmse_theta),
                    _fmt(r.rmse_theta_stderr),
                    _fmt(r.rmse_r),
                    _fmt(r.rmse_r_stderr),
                    _fmt(r.outage_prob),
                    _fmt(r.outage_stderr),
                ]
            )


def write_trials_csv(path, points: Sequence[SweepPoint]) -> None:
    """Per-trial records for every sweep point, in sweep order.

    The trial column is a global counter; blocks are contiguous per sweep
    point, with block sizes recoverable from metrics.csv's trials column.
    """
    counter = 0
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIALS_COLUMNS)
        for point in points:
            for t in point.trials:
                writer.writerow(
                    [
                        _fmt(counter),
                        _fmt(t.seed),
                        _fmt(t.theta_true.x),
                        _fmt(t.theta_true.y),
                        _fmt(t.r_true),
                        _fmt(t.theta_hat.x if t.theta_hat else None),
                        _fmt(t.theta_hat.y if t.theta_hat else None),
                        _fmt(t.r_hat),
                        _fmt(t.n_blocked),
                        _fmt(t.n_nonblocked),
                        _fmt(t.outage),
                        _fmt(t.alpha_final),
                    ]
                )
                counter += 1


def read_metrics_csv(path) -> List[Dict]:
    out: List[Dict] = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            parsed = dict(row)
            for key in METRICS_COLUMNS[4:]:
                parsed[key] = float(row[key])
            parsed["sweep_value"] = float(row["sweep_value"])
            parsed["grid_L"] = int(row["grid_L"])
            parsed["trials"] = int(row["trials"])
            out.append(parsed)
    return out


def read_trials_csv(path) -> List[Dict]:
    out: List[Dict] = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            parsed: Dict = {
                "trial": int(row["trial"]),
                "seed": int(row["seed"]),
                "theta_true_x": float(row["theta_true_x"]),
                "theta_true_y": float(row["theta_true_y"]),
                "r_true": float(row["r_true"]),
                "n_blocked": int(row["n_blocked"]),
                "n_nonblocked": int(row["n_nonblocked"]),
                "outage": row["outage"] == "1",
            }
            for key in ("theta_hat_x", "theta_hat_y", "r_hat", "alpha_final"):
                parsed[key] = float(row[key]) if row[key] != "" else None
            out.append(parsed)
    return out


def write_manifest(
    out_dir, snapshot: Dict, seed: int, version: str, outputs: Sequence[str]
) -> Path:
    """Record the resolved config and planned outputs before running."""
    path = Path(out_dir) / "manifest.json"
    manifest = {
        "config": snapshot,
        "master_seed": seed,
        "code_version": version,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": list(outputs),
    }
    with path.open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path


def render_figures(out_dir, rows: Sequence[MetricsRow], sweep_var: str) -> List[Path]:
    """Render RMSE and outage curves for a sweep next to the CSVs."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    grids = sorted({r.grid_l for r in rows})
    written: List[Path] = []

    def _series(metric: str, stderr: str, ylabel: str, fname: str, logy: bool) -> None:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for g in grids:
            sub = [r for r in rows if r.grid_l == g]
            xs = [r.sweep_value for r in sub]
            ys = [getattr(r, metric) for r in sub]
            es = [2.0 * getattr(r, stderr) for r in sub]
            ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label=f"{g}x{g} PD grid")
        ax.set_xlabel(sweep_var)
        ax.set_ylabel(ylabel)
        if logy and all(
            getattr(r, metric) > 0 for r in rows if getattr(r, metric) == getattr(r, metric)
        ):
            ax.set_yscale("log")
        ax.grid(True, alpha=0.4)
        ax.legend()
        fig.tight_layout()
        path = out_dir / fname
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    _series("rmse_theta", "rmse_theta_stderr", "center RMSE [m]", "rmse_theta.png", True)
    _series("rmse_r", "rmse_r_stderr", "radius RMSE [m]", "rmse_r.png", True)
    _series("outage_prob", "outage_stderr", "outage probability", "outage_prob.png", False)
    return written
