"""Static figures written next to CSV/JSON reports.

Uses ``matplotlib.figure.Figure`` directly so no pyplot global state or
interactive backend is involved.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .report import ENERGY_UNIT, ReportBundle


def _new_figure(width=6.0, height=None) -> Figure:
    golden = (np.sqrt(5) - 1.0) / 2.0
    return Figure(figsize=(width, height or width * golden), layout="constrained")


def _style(ax):
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)
    ax.tick_params(direction="out")


def figure_path(report_path: Path) -> Path:
    return Path(report_path).with_suffix(".png")


def plot_sweep(bundle: ReportBundle, path: Path) -> Path:
    rows = bundle.sweep_rows
    x = np.array([r["value"] for r in rows], dtype=float)
    fig = _new_figure()
    ax = fig.add_subplot()
    _style(ax)
    if bundle.sweep_parameter == "oracle_steps":
        err = np.array([r["oracle_error"] for r in rows], dtype=float)
        ax.loglog(x, err, "o-", color="k", label="|W_sim - W_analytic|")
        ax.loglog(x, err[0] * x[0] / x, ":", color="0.5", label="1/N reference")
        ax.set_xlabel("oracle steps N")
        ax.set_ylabel(f"work error [{ENERGY_UNIT}]")
    else:
        ax.plot(x, [r["W_extracted"] for r in rows], "o-", color="k", label="W extracted")
        ax.plot(x, [r["dW_lost"] for r in rows], "s--", color="C3", label="T dS (deficit)")
        if "W_selective" in rows[0]:
            ax.plot(x, [r["W_selective"] for r in rows], "^-.", color="C0", label="W selective")
        label = {"basis_angle": "basis angle [rad]", "temperature": f"T [{ENERGY_UNIT}]"}
        ax.set_xlabel(label.get(bundle.sweep_parameter, bundle.sweep_parameter))
        ax.set_ylabel(f"work [{ENERGY_UNIT}]")
        ax.axhline(0.0, color="0.8", lw=0.8, zorder=0)
    ax.set_title(bundle.scenario)
    ax.legend(frameon=False)
    fig.savefig(path, dpi=150)
    return Path(path)


def plot_run(bundle: ReportBundle, path: Path) -> Path:
    rows = bundle.ledger_rows
    labels = [r["stroke"].replace("_", "\n") for r in rows]
    pos = np.arange(len(rows))
    fig = _new_figure()
    ax = fig.add_subplot()
    _style(ax)
    ax.bar(pos - 0.2, [r["W_by_system"] for r in rows], 0.4, color="k", label="W by system")
    ax.bar(pos + 0.2, [r["Q_from_bath"] for r in rows], 0.4, color="C1", label="Q from bath")
    ax.axhline(0.0, color="0.5", lw=0.8)
    ax.set_xticks(pos, labels)
    ax.set_ylabel(f"energy [{ENERGY_UNIT}]")
    w = bundle.summary.get("W_extracted")
    ax.set_title(f"{bundle.scenario}: W_extracted = {w:.6g}" if w is not None else bundle.scenario)
    ax.legend(frameon=False)
    fig.savefig(path, dpi=150)
    return Path(path)


def plot_bundle(bundle: ReportBundle, path: Path) -> Path:
    if bundle.sweep_parameter is not None:
        return plot_sweep(bundle, path)
    return plot_run(bundle, path)
