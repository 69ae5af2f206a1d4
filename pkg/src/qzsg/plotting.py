"""PNG figures for run outputs, rendered off-screen with the Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .trajectory import Trajectory  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_entropy(traj: Trajectory, path) -> Path:
    """Relative entropies to the reference against time."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(traj.t, traj.s_rho, label="rho")
    ax.plot(traj.t, traj.s_sigma, label="sigma")
    ax.plot(traj.t, traj.s_total, "k", lw=2, label="total")
    ax.set_xlabel("t")
    ax.set_ylabel("relative entropy (nats)")
    ax.legend(loc="best", frameon=False)
    return _save(fig, path)


def plot_frob_return(traj: Trajectory, path, return_frac: float | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(traj.t, traj.frob_return, lw=1)
    if return_frac is not None:
        ax.axhline(return_frac * float(np.max(traj.frob_return)), color="r", ls="--", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("distance to initial state")
    return _save(fig, path)


def plot_bloch(traj: Trajectory, path) -> Path:
    """Both qubit strategies traced inside the Bloch ball."""
    fig = plt.figure(figsize=(5, 5))
    ax = fig.add_subplot(projection="3d")
    u, v = np.mgrid[0 : 2 * np.pi : 30j, 0 : np.pi : 15j]
    ax.plot_wireframe(np.cos(u) * np.sin(v), np.sin(u) * np.sin(v), np.cos(v), color="0.85", lw=0.4)
    for vec, name in ((traj.bloch_rho, "rho"), (traj.bloch_sigma, "sigma")):
        if vec is not None:
            ax.plot(vec[:, 0], vec[:, 1], vec[:, 2], lw=1, label=name)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    ax.legend(loc="upper left", frameon=False)
    return _save(fig, path)


def plot_sweep(seeds, t_returns, path) -> Path:
    """Return times per seed; seeds that never returned are marked on the axis."""
    seeds = np.asarray(seeds)
    tr = np.array([np.nan if x is None else x for x in t_returns], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ok = ~np.isnan(tr)
    ax.plot(seeds[ok], tr[ok], "o")
    if (~ok).any():
        ax.plot(seeds[~ok], np.zeros((~ok).sum()), "rx", label="no return")
        ax.legend(frameon=False)
    ax.set_xlabel("seed")
    ax.set_ylabel("return time")
    return _save(fig, path)


def trajectory_figures(traj: Trajectory, out_dir, return_frac: float | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    paths = []
    if traj.s_total is not None:
        paths.append(plot_entropy(traj, out_dir / "entropy.png"))
    if traj.frob_return is not None:
        paths.append(plot_frob_return(traj, out_dir / "frob_return.png", return_frac))
    if traj.bloch_rho is not None or traj.bloch_sigma is not None:
        paths.append(plot_bloch(traj, out_dir / "bloch.png"))
    return paths
