"""Figures for run records and comparison tables, rendered to files only."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import CANDIDATE_IDS, Comparison, Mode, RunRecord  # noqa: E402
from .model import wrap_angle  # noqa: E402

CONTROLLER_LABELS = {1: "transit", 2: "station-keep", 3: "reverse"}


def plot_run(record: RunRecord, path: str | Path) -> Path:
    """Path in the horizontal plane, selection trace and pose errors."""
    path = Path(path)
    t = record.t
    x, y = record.column("x"), record.column("y")
    xd, yd = record.column("x_d"), record.column("y_d")
    pos_err = np.hypot(x - xd, y - yd)
    psi_err = np.degrees([wrap_angle(a - b) for a, b in zip(record.column("psi"), record.column("psi_d"))])

    fig, axes = plt.subplots(3, 1, figsize=(8, 10), constrained_layout=True)
    ax = axes[0]
    # East on the horizontal axis, North up.
    ax.plot(yd, xd, "k--", lw=1, label="reference")
    ax.plot(y, x, lw=1.2, label="vehicle")
    ax.set_xlabel("east (m)")
    ax.set_ylabel("north (m)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best")
    ax.set_title(f"{record.mode.value}, seed {record.seed}")

    ax = axes[1]
    ax.step(t, record.sigma, where="post")
    ax.set_yticks(CANDIDATE_IDS, [CONTROLLER_LABELS[q] for q in CANDIDATE_IDS])
    ax.set_ylim(0.5, 3.5)
    ax.set_ylabel("active controller")

    ax = axes[2]
    ax.plot(t, pos_err, label="position (m)")
    ax2 = ax.twinx()
    ax2.plot(t, psi_err, color="tab:orange", lw=0.8, label="heading (deg)")
    ax.set_xlabel("t (s)")
    ax.set_ylabel("position error (m)")
    ax2.set_ylabel("heading error (deg)")

    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_comparison(comparison: Comparison, path: str | Path) -> Path:
    """Bar chart of the seed-averaged error integrals per mode."""
    path = Path(path)
    modes = [m for m in Mode if comparison.average(m) is not None]
    avg = [comparison.average(m) for m in modes]
    labels = [m.value for m in modes]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True)
    axes[0].bar(labels, [a.pi_r for a in avg], color="tab:blue")
    axes[0].set_ylabel("position error integral (m^2 s)")
    axes[1].bar(labels, [a.pi_psi for a in avg], color="tab:orange")
    axes[1].set_ylabel("heading error integral (deg^2 s)")
    for ax in axes:
        ax.set_yscale("log")
        ax.tick_params(axis="x", rotation=20)
    fig.suptitle(f"mean over {len(comparison.seeds)} seeds")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
