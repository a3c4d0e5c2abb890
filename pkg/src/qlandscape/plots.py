"""Figure rendering for sweep outputs.

The CSV files remain the data contract; these helpers draw the standard
companion figures (success-vs-parameters curves, rank staircases, spectra,
training traces) next to them.  All functions write PNG files and never
open interactive windows.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_success",
    "plot_rank_staircase",
    "plot_spectrum",
    "plot_traces",
    "render_sweep_figures",
]


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)


def plot_success(success_rows, path, dla_dim=None, title=None):
    """success_rows: iterable of (depth, M, probability, n_runs)."""
    ms = [r[1] for r in success_rows]
    probs = [r[2] for r in success_rows]
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(ms, probs, "o-", color="tab:blue")
    if dla_dim is not None:
        ax.axvline(dla_dim, color="k", lw=1, ls="--", label=f"DLA dim = {dla_dim}")
        ax.legend(frameon=False)
    ax.set_xlabel("number of parameters M")
    ax.set_ylabel("success probability")
    ax.set_ylim(-0.05, 1.05)
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_rank_staircase(rank_rows, path, dla_dim=None, title=None):
    """rank_rows: iterable with .m, .rank, .point_kind, .matrix attributes."""
    fig, ax = plt.subplots(figsize=(5, 3.4))
    styles = {
        ("random", "qfim"): ("tab:blue", "o", "QFIM, random points"),
        ("optimum", "qfim"): ("tab:green", "s", "QFIM, optima"),
        ("optimum", "hessian"): ("tab:red", "^", "Hessian, optima"),
    }
    seen = set()
    for key, (color, marker, label) in styles.items():
        rows = [r for r in rank_rows if (r.point_kind, r.matrix) == key]
        if not rows:
            continue
        ms = np.array([r.m for r in rows])
        ranks = np.array([r.rank for r in rows])
        jitter = 0.15 * (np.arange(len(ms)) % 3 - 1)
        ax.plot(ms + jitter, ranks, marker, ms=4, color=color, alpha=0.6,
                label=label if key not in seen else None)
        seen.add(key)
    lims = ax.get_xlim()
    grid = np.linspace(0, max(lims[1], 1), 50)
    ax.plot(grid, grid, color="gray", lw=1, ls=":", label="rank = M")
    if dla_dim is not None:
        ax.axhline(dla_dim, color="k", lw=1, ls="--", label=f"DLA dim = {dla_dim}")
    ax.set_xlabel("number of parameters M")
    ax.set_ylabel("numerical rank")
    ax.legend(frameon=False, fontsize=8)
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_spectrum(eigenvalues, path, tolerance=None, title=None):
    w = np.asarray(eigenvalues, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.4))
    pos = np.maximum(np.abs(w), 1e-20)
    ax.semilogy(np.arange(len(w)), pos, "o", ms=4,
                color="tab:blue", label="|eigenvalue|")
    neg = w < 0
    if neg.any():
        ax.semilogy(np.nonzero(neg)[0], pos[neg], "x", ms=5, color="tab:red",
                    label="negative")
    if tolerance is not None and len(w) and w[0] > 0:
        ax.axhline(tolerance * w[0], color="k", lw=1, ls="--",
                   label="rank cutoff")
    ax.set_xlabel("eigenvalue index (descending)")
    ax.set_ylabel("magnitude")
    ax.legend(frameon=False, fontsize=8)
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_traces(traces, path, target=None, title=None):
    """traces: iterable of 1-D loss arrays (one per run)."""
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for trace in traces:
        trace = np.asarray(trace, dtype=float)
        y = trace - target if target is not None else trace
        y = np.maximum(np.abs(y), 1e-16)
        ax.semilogy(np.arange(len(y)), y, lw=0.8, alpha=0.7)
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss - target" if target is not None else "loss")
    if title:
        ax.set_title(title)
    _save(fig, path)


def render_sweep_figures(result, outdir=None) -> list[Path]:
    """Draw the companion figures for a completed sweep next to its CSVs."""
    outdir = Path(outdir or result.output_dir)
    written = []
    path = outdir / "success.png"
    plot_success(result.success, path, dla_dim=result.dla_dim,
                 title=f"{result.config.task}, n={result.config.n}")
    written.append(path)
    if result.rank_rows:
        path = outdir / "ranks.png"
        plot_rank_staircase(result.rank_rows, path, dla_dim=result.dla_dim,
                            title=f"{result.config.task}, n={result.config.n}")
        written.append(path)
    if result.config.save_traces:
        depth = result.config.depth_list[-1]
        traces = [r.record.loss_trace for r in result.runs if r.depth == depth]
        path = outdir / f"traces_depth{depth}.png"
        plot_traces(traces, path, target=result.target, title=f"depth {depth}")
        written.append(path)
    return written
