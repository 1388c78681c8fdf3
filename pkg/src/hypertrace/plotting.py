"""Figures written next to the CSV/JSON outputs of the command line."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def success_curve(report, path: Path) -> Path:
    """Raw success rate against T (log scale) with 3-sigma bars."""
    T = np.array(report.schedule[:len(report.success)], dtype=float)
    rate = np.array(report.success)
    se = np.array(report.stderr())
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(T, rate, yerr=3 * se, marker="o", capsize=3)
    ax.axhline(report.target, color="grey", ls="--", lw=1, label=f"target {report.target}")
    if report.minimal_T is not None:
        ax.axvline(report.minimal_T, color="tab:red", ls=":", lw=1, label=f"T = {report.minimal_T}")
    ax.set_xscale("log", base=2)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("traces T")
    ax.set_ylabel("success rate")
    ax.set_title(f"n={report.n}, d={report.d}, q={report.q}")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def arc_profile(exps, cs, rho: float, L: float, best_t: float, path: Path, samples: int = 2048) -> Path:
    """|f(rho e^{i pi t})| along the searched arc, the chosen point marked."""
    from .bounds import eval_on_circle

    t = np.linspace(-1 / L, 1 / L, samples)
    vals = np.abs(eval_on_circle(np.asarray(exps), np.asarray(cs, dtype=complex), rho, math.pi * t))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(t, np.maximum(vals, 1e-300))
    ax.axvline(best_t, color="tab:red", ls=":", lw=1)
    ax.set_xlabel("theta / pi")
    ax.set_ylabel("|f|")
    ax.set_title(f"arc L={L:g}, rho={rho:.4f}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
