"""Figure rendering for run outputs.

Reads the delimited files a command produced and drops matplotlib PNGs next
to them (or into a separate directory). Headless-safe: the Agg backend is
forced before pyplot loads.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIG_SIZE = (6.4, 4.0)
DPI = 120


def _read_csv(path: Path):
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows


def _numeric(rows, col):
    return np.array([float(r[col]) for r in rows])


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_series(csv_path: Path, out_png: Path, x_label: str) -> list[Path]:
    """State series (one line per agent coordinate) plus a consensus-error
    figure when the file carries that column."""
    header, rows = _read_csv(csv_path)
    xs = _numeric(rows, 0)
    has_consensus = header[-1] == "consensus_error"
    state_cols = range(1, len(header) - 1 if has_consensus else len(header))
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    for col in state_cols:
        ax.plot(xs, _numeric(rows, col), lw=1.0, label=header[col])
    ax.set_xlabel(x_label)
    ax.set_ylabel("state")
    if len(header) <= 12:
        ax.legend(fontsize=8)
    written = [_save(fig, out_png)]
    if has_consensus:
        err = _numeric(rows, len(header) - 1)
        fig, ax = plt.subplots(figsize=FIG_SIZE)
        positive = err > 0
        if positive.any():
            ax.semilogy(xs[positive], err[positive], lw=1.0)
        ax.set_xlabel(x_label)
        ax.set_ylabel("consensus error")
        written.append(_save(fig, out_png.with_name(out_png.stem + "_consensus.png")))
    return written


def render_runs(csv_path: Path, out_png: Path) -> list[Path]:
    header, rows = _read_csv(csv_path)
    basin_col = header.index("basin")
    labels = [r[basin_col] for r in rows]
    order = sorted(set(labels))
    counts = [labels.count(lbl) for lbl in order]
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    ax.bar(order, counts)
    ax.set_ylabel("runs")
    ax.set_title("basin counts")
    written = [_save(fig, out_png)]
    mean_cols = [i for i, h in enumerate(header) if h.startswith("mean_")]
    if len(mean_cols) == 1:
        means = _numeric(rows, mean_cols[0])
        fig, ax = plt.subplots(figsize=FIG_SIZE)
        ax.hist(means[np.isfinite(means)], bins=40)
        ax.set_xlabel("final mean state")
        ax.set_ylabel("runs")
        written.append(_save(fig, out_png.with_name(out_png.stem + "_means.png")))
    return written


def render_sweep(csv_path: Path, out_png: Path) -> list[Path]:
    header, rows = _read_csv(csv_path)
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    try:
        xs = _numeric(rows, 0)
    except ValueError:
        xs = np.arange(len(rows))
        ax.set_xticks(xs, [r[0] for r in rows])
    for col in range(1, 5):
        ax.plot(xs, _numeric(rows, col), marker="o", label=header[col])
    ax.set_xlabel(header[0])
    ax.set_ylabel("rate")
    ax.legend(fontsize=8)
    return [_save(fig, out_png)]


def render_density(csv_path: Path, out_png: Path) -> list[Path]:
    header, rows = _read_csv(csv_path)
    xs = _numeric(rows, 0)
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    for col in range(1, len(header)):
        ax.plot(xs, _numeric(rows, col), lw=1.0,
                label=header[col].replace("density_eps_", "eps="))
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    return [_save(fig, out_png)]


_RENDERERS = {
    "trajectory.csv": lambda p, out: render_series(p, out / "trajectory.png", "k"),
    "flow.csv": lambda p, out: render_series(p, out / "flow.png", "t"),
    "dgf.csv": lambda p, out: render_series(p, out / "dgf.png", "t"),
    "runs.csv": lambda p, out: render_runs(p, out / "basins.png"),
    "sweep.csv": lambda p, out: render_sweep(p, out / "sweep.png"),
    "density.csv": lambda p, out: render_density(p, out / "density.png"),
}


def render_dir(src, out=None) -> list[Path]:
    """Render figures for every known delimited file under ``src``."""
    src = Path(src)
    out = Path(out) if out is not None else src
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for name, renderer in _RENDERERS.items():
        path = src / name
        if path.is_file():
            written.extend(renderer(path, out))
    return written
