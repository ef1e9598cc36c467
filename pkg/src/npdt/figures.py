"""Matplotlib rendering of reports to image files.

All figures are rendered headlessly (Agg) next to the delimited output they
visualize.  Rendering is optional everywhere: the CSV/JSON contracts of the
CLI do not depend on this module.
"""
from __future__ import annotations

import os
import tempfile

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "trajectory_figure",
    "spectrum_figure",
    "scan_figure",
]


def _save_atomic(fig, path) -> str:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".npdt-fig-", suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=150, format="png")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)
    return str(path)


def trajectory_figure(traj, path, diag=None) -> str:
    """State components over time; with diagnostics, a second panel shows the
    mass and competition series and (when present) the energy."""
    nrows = 2 if diag is not None else 1
    fig, axes = plt.subplots(nrows, 1, figsize=(7.0, 3.0 * nrows), sharex=True, squeeze=False)
    ax = axes[0][0]
    n = traj.states.shape[1]
    shown = min(n, 12)
    for i in range(shown):
        ax.plot(traj.times, traj.states[:, i], lw=0.9, label=f"u_{i + 1}" if n <= 6 else None)
    if n > shown:
        ax.set_title(f"first {shown} of {n} components")
    if n <= 6:
        ax.legend(loc="best", fontsize=8)
    ax.set_ylabel("state")
    if diag is not None:
        ax2 = axes[1][0]
        ax2.plot(traj.times, diag.l1_norm, lw=1.0, label="mass")
        ax2.plot(traj.times, diag.competition, lw=1.0, label="competition")
        if diag.energy_f is not None:
            ax2.plot(traj.times, diag.energy_f, lw=1.0, label="energy")
        ax2.legend(loc="best", fontsize=8)
        ax2.set_ylabel("diagnostics")
    axes[-1][0].set_xlabel("t")
    fig.tight_layout()
    return _save_atomic(fig, path)


def spectrum_figure(eigenvalues, path, roots=None, title="linearization spectrum") -> str:
    """Complex-plane scatter of a spectrum, optionally overlaid with the
    zeros of the secular characteristic function."""
    ev = np.asarray(eigenvalues, dtype=complex)
    fig, ax = plt.subplots(figsize=(5.0, 4.5))
    ax.scatter(ev.real, ev.imag, marker="x", s=45, color="tab:blue", label="eigenvalues")
    if roots is not None and len(roots):
        rt = np.asarray(roots, dtype=complex)
        ax.scatter(
            rt.real, rt.imag, marker="o", s=60, facecolors="none",
            edgecolors="tab:red", label="secular roots",
        )
    ax.axvline(0.0, color="gray", lw=0.7)
    ax.axhline(0.0, color="gray", lw=0.7)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save_atomic(fig, path)


def scan_figure(result, path) -> str:
    """Stability margin of the equilibrium along the scanned family with the
    refined crossings marked."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.plot(result.thetas, result.min_real_parts, lw=1.2)
    ax.axhline(0.0, color="gray", lw=0.7)
    for cr in result.crossings:
        color = "tab:red" if cr.kind == "hopf" else "tab:orange"
        ax.axvline(cr.theta, color=color, ls="--", lw=1.0)
        ax.annotate(
            f"{cr.kind} @ {cr.theta:.4f}\n|Im| = {cr.imag_part:.3f}",
            xy=(cr.theta, 0.0),
            xytext=(5, 10),
            textcoords="offset points",
            fontsize=8,
        )
    for g in result.gaps:
        ax.axvline(g, color="lightgray", ls=":", lw=0.8)
    ax.set_xlabel("theta")
    ax.set_ylabel("min Re of linearization spectrum")
    fig.tight_layout()
    return _save_atomic(fig, path)
