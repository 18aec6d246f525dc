"""Figures rendered from emitted CSV files (matplotlib, file output only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import read_series, read_table  # noqa: E402


def _xy(series, key):
    pts = [(t, v) for t, v in zip(series["time"], series[key]) if v is not None]
    if not pts:
        return None, None
    t, v = zip(*pts)
    return np.array(t), np.array(v)


def plot_series(csv_path, png_path=None):
    """Consensus parameter (log scale), cluster count and POD rank against time."""
    csv_path = Path(csv_path)
    series = read_series(csv_path)
    png_path = Path(png_path) if png_path else csv_path.with_suffix("").with_suffix(".png")
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))
    t, x = _xy(series, "X")
    axes[0].semilogy(t, np.maximum(x, 1e-300))
    axes[0].set_ylabel("X(t)")
    for ax, key, label in ((axes[1], "K", "K(t)"), (axes[2], "r", "r(t)")):
        t, v = _xy(series, key)
        if t is None:
            ax.text(0.5, 0.5, "not recorded", ha="center", va="center", transform=ax.transAxes)
        else:
            ax.step(t, v, where="post")
        ax.set_ylabel(label)
    for ax in axes:
        ax.set_xlabel("t")
    fig.suptitle(csv_path.name.replace(".series.csv", ""))
    fig.tight_layout()
    fig.savefig(png_path, dpi=110)
    plt.close(fig)
    return png_path


def plot_trajectories(states, png_path, title=""):
    """Agent paths in the plane of the first two coordinates."""
    states = np.asarray(states)
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for i in range(states.shape[1]):
        ax.plot(states[:, i, 0], states[:, i, 1 if states.shape[2] > 1 else 0], lw=0.8)
    ax.plot(states[0, :, 0], states[0, :, 1 if states.shape[2] > 1 else 0], "k.", ms=4)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=110)
    plt.close(fig)
    return Path(png_path)


def plot_bench(csv_path, png_path=None):
    """Normalized time and speed-up against N, one line per (strategy, d)."""
    csv_path = Path(csv_path)
    rows = read_table(csv_path)
    png_path = Path(png_path) if png_path else csv_path.with_name("bench.png")
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.6))
    groups = sorted({(r["strategy"], int(r["d"])) for r in rows})
    for strategy, d in groups:
        cell = sorted((int(r["N"]), r) for r in rows if r["strategy"] == strategy and int(r["d"]) == d)
        for ax, key in zip(axes, ("normalized_time", "speedup")):
            pts = [(n, float(r[key])) for n, r in cell if r[key] != ""]
            if pts:
                ax.plot(*zip(*pts), marker="o", label=f"{strategy}, d={d}")
    axes[0].set_ylabel("normalized time")
    axes[1].set_ylabel("speed-up vs full")
    for ax in axes:
        ax.set_xlabel("N")
        if ax.lines:
            ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(png_path, dpi=110)
    plt.close(fig)
    return png_path


def render_directory(out_dir):
    """Render a figure for every series CSV, stored state file and bench table in ``out_dir``."""
    out = Path(out_dir)
    made = []
    for csv_path in sorted(out.glob("*.series.csv")):
        made.append(plot_series(csv_path))
        states = csv_path.with_name(csv_path.name.replace(".series.csv", ".states.npy"))
        if states.exists():
            made.append(plot_trajectories(
                np.load(states), csv_path.with_name(csv_path.name.replace(".series.csv", ".paths.png")),
                title=csv_path.name.replace(".series.csv", ""),
            ))
    if (out / "bench.table.csv").exists():
        made.append(plot_bench(out / "bench.table.csv"))
    return made
