"""Figures rendered next to the CSV/JSON outputs (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_snapshots", "plot_energy", "plot_kernel", "plot_eigenvalues"]

_META = {"Software": None}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def plot_snapshots(path, atoms, snapshots, interface=None, title=""):
    """One panel per snapshot time.

    ``snapshots`` is a list of (t, displacement) with displacements indexed
    like ``atoms``.
    """
    n = max(len(snapshots), 1)
    fig, axes = plt.subplots(n, 1, figsize=(7, 1.6 * n + 0.6), sharex=True, squeeze=False)
    for ax, (t, u) in zip(axes[:, 0], snapshots):
        ax.plot(atoms, u, lw=0.8)
        if interface is not None:
            ax.axvline(interface, color="0.5", ls="--", lw=0.8)
        ax.set_ylabel(f"t = {t:g}")
    axes[-1, 0].set_xlabel("atom")
    if title:
        axes[0, 0].set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_energy(path, times, curves: dict, title=""):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, values in curves.items():
        ax.plot(times, values, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_kernel(path, times, nodes, theta, highlight=None):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for j, node in enumerate(nodes):
        style = {"lw": 1.8, "color": "k"} if node == highlight else {"lw": 0.7}
        ax.plot(times, theta[:, j], **style)
    ax.set_xlabel("t")
    ax.set_ylabel("diagonal kernel entry")
    fig.tight_layout()
    return _save(fig, path)


def plot_eigenvalues(path, report: dict):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for key, marker in (("direct", "x"), ("conventional", "o"), ("extended", "+")):
        if key not in report:
            continue
        ev = np.asarray(report[key]["eigenvalues"], dtype=float).reshape(-1, 2)
        ax.scatter(ev[:, 0], ev[:, 1], marker=marker, label=key)
    ax.axvline(0.0, color="0.5", lw=0.8)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)
