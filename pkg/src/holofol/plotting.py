"""Deterministic SVG figures for the report commands."""

from __future__ import annotations

from pathlib import Path
from collections.abc import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "svg.hashsalt": "holofol",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def orbit_scatter(path: Path, points: np.ndarray, radius: float, fixed: Sequence[complex] = ()) -> None:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        ax.scatter(points.real, points.imag, s=0.5, c="tab:blue", linewidths=0, rasterized=False)
        if len(fixed):
            f = np.asarray(fixed, dtype=complex)
            ax.scatter(f.real, f.imag, s=12, marker="x", c="tab:red", label="hyperbolic fixed points")
            ax.legend(loc="upper right", frameon=False)
        t = np.linspace(0, 2 * np.pi, 400)
        ax.plot(radius * np.cos(t), radius * np.sin(t), "k-", lw=0.6)
        ax.set_aspect("equal")
        ax.set_xlabel("Re z")
        ax.set_ylabel("Im z")
        ax.set_title("pseudo-orbit on the transverse disk")
        _save(fig, path)


def coverage_curve(path: Path, rows: Sequence[tuple[int, float]]) -> None:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        b = [r[0] for r in rows]
        c = [r[1] for r in rows]
        ax.plot(b, c, "o-", ms=3)
        ax.set_xlabel("budget (steps)")
        ax.set_ylabel("coverage")
        ax.set_ylim(0, 1.02)
        _save(fig, path)


def tracking_plot(path: Path, tracks: Sequence[tuple[str, np.ndarray, np.ndarray]]) -> None:
    """One curve per word: |multiplier| along the parameter path."""
    with plt.rc_context(_STYLE):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.2))
        for label, pts, mults in tracks:
            a1.plot(pts.real, pts.imag, ".-", ms=2, label=label)
            a2.plot(np.arange(len(mults)), np.abs(mults), ".-", ms=2, label=label)
        a1.set_xlabel("Re p(t)")
        a1.set_ylabel("Im p(t)")
        a2.set_xlabel("sample")
        a2.set_ylabel("|f'(p(t))|")
        a2.axhline(1.0, color="k", lw=0.5)
        a2.legend(frameon=False, fontsize=7)
        fig.tight_layout()
        _save(fig, path)


def growth_plot(path: Path, rows: Sequence[tuple[int, int, int]]) -> None:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        n = [r[0] for r in rows]
        g = [r[1] for r in rows]
        ax.semilogy(n, g, "o-", ms=3)
        ax.set_xlabel("radius n")
        ax.set_ylabel("ball size")
        _save(fig, path)


def singularity_plot(path: Path, points: Sequence[complex], labels: Sequence[str]) -> None:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        p = np.asarray(points, dtype=complex)
        ax.scatter(p.real, p.imag, s=16)
        for z, lab in zip(p, labels):
            ax.annotate(lab, (z.real, z.imag), fontsize=7, xytext=(3, 3), textcoords="offset points")
        ax.set_xlabel("Re v")
        ax.set_ylabel("Im v")
        ax.set_title("singular points on the line at infinity")
        ax.set_aspect("equal", adjustable="datalim")
        _save(fig, path)
