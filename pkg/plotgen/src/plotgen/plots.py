"""The three figure styles: convergence, flow-count, and error-field plots.

Convergence and flow plots are log-log with one series per method; the
convergence plot carries exactly three dotted reference guides of slopes
one, two, and three anchored at the steepest method's largest-step point.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm

from .io import ConvergenceRow, load_convergence, load_errorfield

GUIDE_ORDERS = (1, 2, 3)
_ANCHOR_METHOD = "C3New"


def _by_method(rows: list[ConvergenceRow], methods: list[str] | None):
    out: dict[str, list[ConvergenceRow]] = {}
    for r in rows:
        if methods and r.method not in methods:
            continue
        out.setdefault(r.method, []).append(r)
    for series in out.values():
        series.sort(key=lambda r: -r.tau)
    return out


def _anchor(series: dict[str, list[ConvergenceRow]]) -> tuple[float, float]:
    """Largest-tau point of the anchor method (fallback: first method)."""
    method = _ANCHOR_METHOD if _ANCHOR_METHOD in series else sorted(series)[0]
    top = series[method][0]
    return top.tau, top.error_l2


def _draw_guides(ax, tau0: float, err0: float, taus: np.ndarray) -> None:
    t = np.array([taus.max(), taus.min()])
    for p in GUIDE_ORDERS:
        ax.loglog(t, err0 * (t / tau0) ** p, linestyle=":", color="grey", linewidth=1)
        ax.annotate(f"order {p}", (t[-1], err0 * (t[-1] / tau0) ** p), fontsize=7, color="grey")


def plot_convergence(csv_in: str | Path, img_out: str | Path, methods: list[str] | None = None):
    rows = load_convergence(csv_in)
    series = _by_method(rows, methods)
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    for method, pts in sorted(series.items()):
        ax.loglog([r.tau for r in pts], [r.error_l2 for r in pts], marker="o", label=method)
    taus = np.array([r.tau for pts in series.values() for r in pts])
    _draw_guides(ax, *_anchor(series), taus)
    ax.set_xlabel(r"time step $\tau$")
    ax.set_ylabel(r"$L^2$ error")
    ax.set_title(rows[0].problem)
    ax.legend()
    ax.grid(True, which="both", alpha=0.2)
    fig.tight_layout()
    fig.savefig(img_out)
    plt.close(fig)
    return Path(img_out)


def plot_flows(csv_in: str | Path, img_out: str | Path, methods: list[str] | None = None):
    rows = load_convergence(csv_in)
    series = _by_method(rows, methods)
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    for method, pts in sorted(series.items()):
        flows = [r.n_diffusion_flows + r.n_source_flows for r in pts]
        errs = [r.error_l2 for r in pts]
        if len(pts) == 1:
            ax.loglog(flows, errs, marker="o", linestyle="none", label=method)
        else:
            ax.loglog(flows, errs, marker="o", label=method)
    ax.set_xlabel("total number of flows")
    ax.set_ylabel(r"$L^2$ error")
    ax.set_title(rows[0].problem)
    ax.legend()
    ax.grid(True, which="both", alpha=0.2)
    fig.tight_layout()
    fig.savefig(img_out)
    plt.close(fig)
    return Path(img_out)


def plot_errorfield(csv_in: str | Path, img_out: str | Path, methods: list[str] | None = None):
    dim, rows = load_errorfield(csv_in)
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    if dim == 1:
        xs = np.array([r["x"] for r in rows])
        es = np.array([r["abs_error"] for r in rows])
        order = np.argsort(xs)
        ax.plot(xs[order], es[order])
        ax.set_xlabel("x")
        ax.set_ylabel("|error|")
    else:
        xs = np.unique([r["x"] for r in rows])
        ys = np.unique([r["y"] for r in rows])
        grid = np.zeros((len(xs), len(ys)))
        xi = {v: i for i, v in enumerate(xs)}
        yi = {v: i for i, v in enumerate(ys)}
        for r in rows:
            grid[xi[r["x"]], yi[r["y"]]] = r["abs_error"]
        # log colour scale: clip exact zeros (boundary nodes) to a floor
        positive = grid[grid > 0]
        floor = positive.min() / 10.0 if positive.size else 1e-16
        clipped = np.maximum(grid, floor)
        vmax = max(clipped.max(), floor * 10.0)  # keep LogNorm valid for a zero field
        pcm = ax.pcolormesh(
            ys, xs, clipped, norm=LogNorm(vmin=floor, vmax=vmax), shading="nearest"
        )
        fig.colorbar(pcm, ax=ax, label="|error|")
        ax.set_xlabel("y")
        ax.set_ylabel("x")
    fig.tight_layout()
    fig.savefig(img_out)
    plt.close(fig)
    return Path(img_out)
