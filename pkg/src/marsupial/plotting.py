"""Matplotlib figures written straight to files (SVG, PNG, PDF by extension)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import Params  # noqa: E402
from .potential import equilibria  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.4,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "marsupial",
    "svg.fonttype": "none",
}

CARRIER = "tab:blue"
PASSENGER = "tab:orange"
TARGET = "tab:red"


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # strip the creation date so repeated runs give identical files
    fig.savefig(path, metadata={"Date": None} if path.suffix.lower() == ".svg" else None)
    plt.close(fig)
    return path


def plot_trajectory(traj, path, obstacles: Sequence = ()) -> Path:
    """Plane projection of both paths plus the three distance histories."""
    with plt.rc_context(RC):
        fig, (ax_xy, ax_d) = plt.subplots(1, 2, figsize=(9.0, 3.8))
        ax_xy.plot(traj.x_c[:, 0], traj.x_c[:, 1], color=CARRIER, label="carrier")
        ax_xy.plot(traj.x_p[:, 0], traj.x_p[:, 1], color=PASSENGER, ls="--", label="passenger")
        ax_xy.plot(*traj.x_t[:2], marker="*", ms=11, color=TARGET, ls="none", label="target")
        ax_xy.plot(*traj.x_c[0, :2], marker="s", color=CARRIER, ls="none")
        if traj.separated.any():
            k = int(np.argmax(traj.separated))
            ax_xy.plot(*traj.x_c[k, :2], marker="o", mfc="none", color="k", ls="none", label="release")
        for obs in obstacles:
            ax_xy.add_patch(plt.Circle(obs.center[:2], obs.radius, color="0.6", alpha=0.5))
        ax_xy.set_aspect("equal", adjustable="datalim")
        ax_xy.set_xlabel("x [m]")
        ax_xy.set_ylabel("y [m]")
        ax_xy.legend(loc="best")

        ax_d.plot(traj.t, traj.e_pc, label=r"$\|e_{pc}\|$", color=PASSENGER)
        ax_d.plot(traj.t, traj.e_tc, label=r"$\|e_{tc}\|$", color=CARRIER)
        ax_d.plot(traj.t, traj.e_pt, label=r"$\|e_{pt}\|$", color=TARGET)
        if traj.separation_time is not None:
            ax_d.axvline(traj.separation_time, color="k", lw=0.8, ls=":")
        ax_d.set_xlabel("t [s]")
        ax_d.set_ylabel("distance [m]")
        ax_d.legend(loc="best")
        fig.tight_layout()
        return _save(fig, path)


def plot_potential(rows, e_tc_norm: float, params: Params, path) -> Path:
    r = np.array([a for a, _ in rows])
    P = np.array([b for _, b in rows])
    eq = equilibria(e_tc_norm, params)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.4))
        ax.plot(r, P, color="k")
        ax.axhline(0.0, color="0.4", lw=0.8)
        for root in (eq.root_mid, eq.root_outer):
            if r.min() <= root <= r.max():
                ax.plot(root, 0.0, marker="o", color=TARGET, ls="none")
        ax.fill_between(r, P, 0, where=P >= 0, color=CARRIER, alpha=0.2, label="P >= 0")
        ax.fill_between(r, P, 0, where=P < 0, color=PASSENGER, alpha=0.2, label="P < 0")
        ax.set_xlabel(r"$\|e_{pc}\|$ [m]")
        ax.set_ylabel("P")
        ax.set_title(rf"$\|e_{{tc}}\|$ = {e_tc_norm:g} ({eq.regime.value})")
        ax.legend(loc="best")
        fig.tight_layout()
        return _save(fig, path)


def plot_jumps(traj, path, baseline=None) -> Path:
    """Per-step relative-input jumps of a run, optionally against the event baseline."""
    from .analysis import jump_series

    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        ax.semilogy(traj.t[1:], np.maximum(jump_series(traj), 1e-18), label="equilibrium-driven")
        if baseline is not None:
            ax.semilogy(baseline.t[1:], np.maximum(jump_series(baseline), 1e-18), ls="--", label="event baseline")
        ax.set_xlabel("t [s]")
        ax.set_ylabel(r"$\|\Delta(u_p - u_c)\|$ [m/s]")
        ax.legend(loc="best")
        fig.tight_layout()
        return _save(fig, path)
