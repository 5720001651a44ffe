"""Matplotlib figures written next to the delimited outputs.

Figures are advisory companions to the JSON/CSV/PPM artifacts (those
are the normative outputs); everything renders through the Agg backend
straight to files.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .numeric import LOG_MAX  # noqa: E402

FIG_DPI = 130


def _finish(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)


def save_residual_figure(report: dict, path: str) -> None:
    """Bar view of the residual suprema against their thresholds."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    names = ["sup_eps0", "sup_eps1", "sup_eps2"]
    values = [max(report.get(k, 0.0), 0.0) for k in names]
    ax.bar(names, values, color="#4878cf")
    ax.axhline(0.25, color="#d65f5f", lw=1.0, ls="--", label="threshold")
    ax.set_ylabel("sup over domain grid")
    ax.set_title(f"residuals at r = {report['r']:g} "
                 f"(admissible: {report['admissible']})")
    ax.legend(frameon=False)
    _finish(fig, path)


def save_orbit_figure(rows: list, path: str) -> None:
    """log|z_n| against n for an orbit record (inf-safe)."""
    ns = [r["n"] for r in rows]
    logs = [min(r["log_abs_z"], LOG_MAX * 10) for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(ns, logs, "o-", color="#4878cf")
    ax.set_xlabel("n")
    ax.set_ylabel("log |z_n|")
    ax.set_title("orbit escape profile")
    _finish(fig, path)


def save_cascade_figure(summary: dict, path: str) -> None:
    """Per-level annulus margins and bound ratios."""
    levels = [lvl for lvl in summary["levels"] if lvl["n"] >= 1]
    ns = [lvl["n"] for lvl in levels]
    margins = [lvl.get("margin", math.nan) for lvl in levels]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.4))
    ax1.bar(ns, margins, color="#4878cf")
    ax1.axhline(0.1, color="#d65f5f", lw=1.0, ls="--")
    ax1.set_xlabel("level")
    ax1.set_ylabel("annulus margin")
    ratios = [lvl["c_ratio"] for lvl in summary["levels"]
              if lvl.get("c_ratio")]
    if ratios:
        xs = [lvl["n"] for lvl in summary["levels"] if lvl.get("c_ratio")]
        ax2.semilogy(xs, [r[0] for r in ratios], "v-", label="min ratio")
        ax2.semilogy(xs, [r[1] for r in ratios], "^-", label="max ratio")
        ax2.axhline(10.0, color="#d65f5f", lw=1.0, ls="--")
        ax2.axhline(0.1, color="#d65f5f", lw=1.0, ls="--")
        ax2.set_xlabel("level")
        ax2.set_ylabel("derivative ratio")
        ax2.legend(frameon=False)
    fig.suptitle(f"cascade depth {summary['depth']}")
    _finish(fig, path)


def save_curve_figure(ts: list, offsets: list, per_step: list,
                      path: str) -> None:
    """Stable-curve offsets over the diameter plus the chart-step decay."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.4))
    ax1.plot(ts, [o.real for o in offsets], label="Re z(t) - Re z(0)")
    ax1.plot(ts, [o.imag for o in offsets], label="Im z(t) - Im z(0)")
    ax1.set_xlabel("t (diameter)")
    ax1.set_ylabel("offset from base")
    ax1.legend(frameon=False)
    ns = [s["n"] for s in per_step]
    vals = [max(s["t_abs"], 1e-320) for s in per_step]
    ax2.semilogy(ns, vals, "o-", color="#4878cf")
    ax2.set_xlabel("chart step")
    ax2.set_ylabel("|t'_n| (floored at 1e-320)")
    fig.suptitle("local stable curve")
    _finish(fig, path)


def save_escape_figure(counts: np.ndarray, max_iter: int, path: str) -> None:
    """Advisory PNG of the escape-count grid (the PPM is normative)."""
    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    shown = np.where(counts >= max_iter, np.nan, counts)
    im = ax.imshow(shown, cmap="twilight", interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    fig.colorbar(im, ax=ax, shrink=0.85, label="escape count")
    _finish(fig, path)


def save_periodic_figure(orbit: list, path: str) -> None:
    """The four orbit points in the z-plane."""
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    zs = [complex(p[0][0], p[0][1]) for p in orbit]
    ax.plot([z.real for z in zs] + [zs[0].real],
            [z.imag for z in zs] + [zs[0].imag], "o-", color="#4878cf")
    for k, z in enumerate(zs):
        ax.annotate(str(k), (z.real, z.imag),
                    textcoords="offset points", xytext=(6, 4))
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title("period-4 orbit")
    _finish(fig, path)
