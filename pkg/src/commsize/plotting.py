"""Figure rendering. The CSV outputs are canonical; these are conveniences."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import EcdfCurve  # noqa: E402

SIM_COLOR = "tab:blue"
BASELINE_COLOR = "orangered"


def _draw_ecdf(ax, curve: EcdfCurve, **kwargs):
    if len(curve):
        ax.step(curve.sizes, curve.frac_at_least, where="post", **kwargs)


def plot_ecdf_grid(cells: list[tuple[dict, EcdfCurve]], path, baseline: EcdfCurve | None = None,
                   rows: str | None = None, cols: str | None = None, title: str | None = None):
    """Grid of log-log complementary eCDFs, one panel per sweep cell.

    ``cells`` holds (params, curve) pairs in row-major order; ``rows`` and
    ``cols`` name the params that vary down and across the grid.
    """
    row_vals = list(dict.fromkeys(p[rows] for p, _ in cells)) if rows else [None]
    col_vals = list(dict.fromkeys(p[cols] for p, _ in cells)) if cols else [None]
    if not rows and not cols:
        col_vals = list(range(len(cells)))
    nr, nc = len(row_vals), len(col_vals)
    fig, axes = plt.subplots(nr, nc, figsize=(2.4 * nc + 0.6, 2.2 * nr + 0.6),
                             squeeze=False, sharex=True, sharey=True)
    for i, (params, curve) in enumerate(cells):
        r = row_vals.index(params[rows]) if rows else 0
        c = col_vals.index(params[cols]) if cols else (i if not rows else 0)
        ax = axes[r, c]
        if baseline is not None:
            _draw_ecdf(ax, baseline, color=BASELINE_COLOR, lw=1.2)
        _draw_ecdf(ax, curve, color=SIM_COLOR, lw=1.2)
        ax.set_xscale("log")
        ax.set_yscale("log")
        if r == 0 and cols:
            ax.set_title(f"{cols} = {params[cols]}", fontsize=9)
        if c == nc - 1 and rows:
            ax.yaxis.set_label_position("right")
            ax.set_ylabel(f"{rows} = {params[rows]}", fontsize=9)
    fig.supxlabel("community size")
    fig.supylabel("proportion of communities at least this large")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_overlay(sim: EcdfCurve, baseline: EcdfCurve, path, label: str = "simulation"):
    fig, ax = plt.subplots(figsize=(4.5, 3.6))
    _draw_ecdf(ax, baseline, color=BASELINE_COLOR, lw=1.4, label="baseline")
    _draw_ecdf(ax, sim, color=SIM_COLOR, lw=1.4, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("community size")
    ax.set_ylabel("proportion at least this large")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_utility_surface(grid: np.ndarray, s_c, s_f, path):
    """Heat map of total benefit; current size across, projected size up."""
    fig, ax = plt.subplots(figsize=(5, 4))
    mesh = ax.pcolormesh(np.asarray(s_c), np.asarray(s_f), grid, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="total expected benefit")
    ax.set_xlabel("current size $S_C$")
    ax.set_ylabel("projected size $S_F$")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
