"""Figures for sweep reports, rendered straight to files (Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import SweepResult, estimate_transition  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (6.4, 3.2),
    "savefig.dpi": 150,
    # stable bytes across runs
    "svg.hashsalt": "clbootstrap",
}


def plot_sweep(res: SweepResult, path) -> None:
    """Outbreak frequency and final infected fraction against ``p0`` (log axis)."""
    cells = sorted((c for c in res.cells if c.p0 > 0), key=lambda c: c.p0)
    with plt.rc_context(STYLE):
        fig, (left, right) = plt.subplots(1, 2, constrained_layout=True)
        if cells:
            p0 = np.array([c.p0 for c in cells])
            left.plot(p0, [c.outbreak_frequency for c in cells], "o-", color="C0")
            med = np.array([c.median_af_fraction for c in cells])
            lo = med - np.array([c.q1_af_fraction for c in cells])
            hi = np.array([c.q3_af_fraction for c in cells]) - med
            right.errorbar(p0, med, yerr=[lo, hi], fmt="s-", color="C1", capsize=2)
            for ax in (left, right):
                ax.set_xscale("log")
                ax.axvline(res.a_c_scale, color="0.5", ls="--", lw=0.8, label="min(p_s, p_d)")
                ax.set_xlabel("initial infection rate p0")
            est = estimate_transition(res)
            if est is not None:
                left.axvline(est, color="C3", ls=":", lw=1, label="estimated transition")
            left.legend(frameon=False, loc="upper left")
        left.set_ylim(-0.05, 1.05)
        left.set_ylabel(f"outbreak frequency (|A_F|/n >= {res.config.gamma_out:g})")
        right.set_ylabel("median |A_F|/n (quartile bars)")
        fig.savefig(path)
        plt.close(fig)
