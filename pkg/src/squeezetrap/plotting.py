"""PNG renderings of command outputs (Agg backend, no pyplot state)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .dynamics import Trajectory

_META = {"Software": None}


def _save(fig: Figure, path: Path) -> Path:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120, metadata=_META)
    return path


def plot_trajectory(traj: Trajectory, path: str | Path) -> Path:
    """Coordinates of both modes and the constraint residual against time."""
    fig = Figure(figsize=(8, 7), layout="constrained")
    ax_a, ax_r, ax_res = fig.subplots(3, 1, sharex=True)
    names = ("xi", "eta", "sigma")
    for ax, offset, title in ((ax_a, 0, "axial"), (ax_r, 3, "radial")):
        for i, name in enumerate(names):
            ax.plot(traj.t, traj.states[:, offset + i], label=name, lw=1)
        ax.set_ylabel(title)
        ax.legend(loc="upper right", fontsize="small")
    res = np.abs(traj.residuals)
    floor = np.finfo(float).tiny
    ax_res.semilogy(traj.t, np.maximum(res[:, 0], floor), label="axial", lw=1)
    ax_res.semilogy(traj.t, np.maximum(res[:, 1], floor), label="radial", lw=1)
    ax_res.set_ylabel("|sigma^2 - xi eta + 1|")
    ax_res.set_xlabel("t")
    ax_res.legend(loc="upper right", fontsize="small")
    return _save(fig, Path(path))


def plot_stability(a, q, stable, beta, path: str | Path, marks: dict[str, tuple[float, float]] | None = None) -> Path:
    """Characteristic exponent over the ``(q, a)`` plane; unstable cells are blank."""
    a, q = np.asarray(a), np.asarray(q)
    fig = Figure(figsize=(6, 5), layout="constrained")
    ax = fig.subplots()
    data = np.where(np.asarray(stable), beta, np.nan)
    if len(a) > 1 and len(q) > 1:
        mesh = ax.pcolormesh(q, a, data, shading="nearest", vmin=0.0, vmax=1.0, cmap="viridis")
        fig.colorbar(mesh, ax=ax, label="beta")
    else:
        ax.scatter(np.repeat(q[None, :], len(a), 0), np.repeat(a[:, None], len(q), 1), c=np.nan_to_num(data, nan=-1))
    for label, (ma, mq) in (marks or {}).items():
        ax.plot([mq], [ma], "r+", ms=10)
        ax.annotate(label, (mq, ma), textcoords="offset points", xytext=(4, 4), color="r")
    ax.set_xlabel("q")
    ax.set_ylabel("a")
    return _save(fig, Path(path))
