"""Render figure panels from ns3dvar CSV run directories.

Forward runs: one panel per tracked Fourier mode (estimator vs signal real
part) plus a relative-error panel. Ensemble runs: pairwise member distances
and their max envelope on a log scale.

Rendering is deterministic: fixed style, fixed size, Agg backend, no
timestamps, so identical CSV input yields identical image bytes.
"""

from __future__ import annotations

import csv
import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_forward_figure", "render_ensemble_figure"]

_STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
}


class MissingColumnError(ValueError):
    """A required CSV column is absent."""


def _read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV; returns (header, data with shape (rows, cols))."""
    if not path.exists():
        raise FileNotFoundError(f"expected {path.name} in {path.parent}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    data = np.asarray(rows, dtype=float) if rows else np.zeros((0, len(header)))
    return header, data


def _column(header: list[str], data: np.ndarray, name: str, path: Path) -> np.ndarray:
    if name not in header:
        raise MissingColumnError(f"column {name!r} not found in {path}")
    return data[:, header.index(name)]


def _mode_labels(header: list[str]) -> list[str]:
    """Mode wavevectors k1_k2 from the re_m_<k1>_<k2> columns, in order."""
    labels = []
    for col in header:
        if col.startswith("re_m_"):
            labels.append(col[len("re_m_"):])
    return labels


def _empty_figure(message: str, out_path: Path) -> Path:
    warnings.warn(message)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.set_axis_off()
        ax.text(0.5, 0.5, message, ha="center", va="center", wrap=True)
        fig.savefig(out_path)
        plt.close(fig)
    return out_path


def render_forward_figure(run_dir: str | Path, out_path: str | Path,
                          max_modes: int = 5) -> Path:
    """Mode-trajectory panels plus a relative-error panel from modes.csv."""
    run_dir, out_path = Path(run_dir), Path(out_path)
    header, data = _read_csv(run_dir / "modes.csv")
    if data.shape[0] == 0:
        return _empty_figure("modes.csv contains no samples", out_path)

    t = _column(header, data, "t", run_dir / "modes.csv")
    rel = _column(header, data, "rel_err", run_dir / "modes.csv")
    labels = _mode_labels(header)[:max_modes]
    if not labels:
        raise MissingColumnError(f"no re_m_* mode columns in {run_dir / 'modes.csv'}")

    n_panels = len(labels) + 1
    ncols = 2
    nrows = (n_panels + ncols - 1) // ncols
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(nrows, ncols, figsize=(9, 2.4 * nrows),
                                 squeeze=False)
        flat = axes.ravel()
        for ax, lab in zip(flat, labels):
            m = _column(header, data, f"re_m_{lab}", run_dir / "modes.csv")
            u = _column(header, data, f"re_u_{lab}", run_dir / "modes.csv")
            ax.plot(t, u, label="signal", color="C0")
            ax.plot(t, m, label="estimator", color="C1", linestyle="--")
            k1, k2 = lab.rsplit("_", 1)[0], lab.rsplit("_", 1)[1]
            ax.set_title(f"Re u_k, k = ({k1}, {k2})")
            ax.set_xlabel("t")
            ax.legend(loc="upper right")
        ax = flat[len(labels)]
        finite = np.isfinite(rel) & (rel > 0)
        if finite.any():
            ax.semilogy(t[finite], rel[finite], color="C3")
        ax.set_title("relative error |m - u| / |u|")
        ax.set_xlabel("t")
        for ax in flat[n_panels:]:
            ax.set_axis_off()
        fig.tight_layout()
        fig.savefig(out_path)
        plt.close(fig)
    return out_path


def render_ensemble_figure(run_dir: str | Path, out_path: str | Path) -> Path:
    """Pairwise member distances and the max envelope from ensemble.csv."""
    run_dir, out_path = Path(run_dir), Path(out_path)
    header, data = _read_csv(run_dir / "ensemble.csv")
    if data.shape[0] == 0:
        return _empty_figure("ensemble.csv contains no samples", out_path)

    t = _column(header, data, "t", run_dir / "ensemble.csv")
    env = _column(header, data, "envelope", run_dir / "ensemble.csv")
    pair_cols = [c for c in header if c.startswith("dist_")]
    if not pair_cols:
        raise MissingColumnError(f"no dist_* columns in {run_dir / 'ensemble.csv'}")

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        all_zero = True
        for col in pair_cols:
            d = _column(header, data, col, run_dir / "ensemble.csv")
            finite = np.isfinite(d) & (d > 0)
            if finite.any():
                all_zero = False
                ax.semilogy(t[finite], d[finite], alpha=0.6,
                            label=col.replace("_", " "))
        finite = np.isfinite(env) & (env > 0)
        if finite.any():
            all_zero = False
            ax.semilogy(t[finite], env[finite], color="k", linewidth=1.8,
                        label="envelope")
        if all_zero:
            ax.plot(t, np.zeros_like(t), color="k", label="envelope (zero)")
            ax.set_ylim(-1, 1)
        ax.set_title("ensemble member distances |m_k - m_1| / |m_1|")
        ax.set_xlabel("t")
        ax.legend(loc="best", fontsize=7)
        fig.tight_layout()
        fig.savefig(out_path)
        plt.close(fig)
    return out_path
