"""Matplotlib rendering of the report figures.

CSV files remain the canonical artifacts; these figures are rendered next
to them as self-contained SVG.  The Agg backend keeps rendering headless
and a fixed hash salt keeps SVG ids stable across runs.
"""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "scenario-gne"

import matplotlib.pyplot as plt
import numpy as np

from .polytope import LOCAL_ROW, HalfspaceSystem


def _save(fig, path, provenance: str) -> None:
    fig.savefig(path, format="svg",
                metadata={"Description": provenance, "Date": None})
    plt.close(fig)


def sweep_figure(k_grid: Sequence[int], mean: np.ndarray, std: np.ndarray,
                 path, provenance: str = "") -> None:
    """Normalized equilibrium-set size against the sample count (log x)."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    k = np.asarray(k_grid, dtype=float)
    ax.plot(k, mean, marker="o", color="tab:blue", label="mean")
    ax.fill_between(k, np.clip(mean - std, 0.0, None), np.clip(mean + std, None, 1.0),
                    alpha=0.25, color="tab:blue", label="std")
    if np.all(k > 0):
        ax.set_xscale("log")
    ax.set_xlabel("number of samples K")
    ax.set_ylabel("normalized set size")
    ax.set_ylim(0.0, 1.05)
    ax.legend(frameon=False)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path, provenance)


def violation_figure(mus: np.ndarray, per_point: np.ndarray,
                     epsilon_bound: Optional[float], path,
                     provenance: str = "") -> None:
    """Per-probe empirical violation frequency with the flat bound overlaid."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(mus, per_point, color="tab:orange", label="empirical violation")
    if epsilon_bound is not None:
        ax.axhline(epsilon_bound, color="tab:blue", linestyle="--",
                   label=f"bound {epsilon_bound:.4f}")
    ax.set_xlabel(r"segment parameter $\mu$")
    ax.set_ylabel("violation probability")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(bottom=0.0)
    ax.legend(frameon=False)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path, provenance)


def set_figure(combined: HalfspaceSystem, endpoints: np.ndarray, path,
               provenance: str = "") -> None:
    """Two-dimensional picture: sampled cuts, local box frame, and the
    equilibrium segment with its extrema.  No-op for other dimensions."""
    if combined.n != 2:
        return
    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    local = combined.row_sample == LOCAL_ROW
    lim = 1.1 * float(np.max(np.abs(combined.b[local]), initial=1.0))
    grid = np.linspace(-lim, lim, 2)
    for a_row, b_val, tag in zip(combined.a, combined.b, combined.row_sample):
        if tag == LOCAL_ROW:
            continue
        if abs(a_row[1]) > 1e-12:
            ax.plot(grid, (b_val - a_row[0] * grid) / a_row[1],
                    color="tab:orange", linestyle="--", linewidth=0.6, alpha=0.6)
        elif abs(a_row[0]) > 1e-12:
            ax.axvline(b_val / a_row[0], color="tab:orange", linestyle="--",
                       linewidth=0.6, alpha=0.6)
    ax.plot(endpoints[:, 0], endpoints[:, 1], color="tab:blue", linewidth=2.0,
            label="equilibrium set")
    ax.scatter(endpoints[:, 0], endpoints[:, 1], color="tab:green", zorder=5,
               label="extrema")
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_aspect("equal")
    ax.legend(frameon=False, loc="upper left")
    fig.tight_layout()
    _save(fig, path, provenance)
