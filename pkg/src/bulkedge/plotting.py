"""Figures for the CLI exports; the CSV files remain the primary output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def spectra_figure(xs: np.ndarray, eigs: np.ndarray, path: str | Path, title: str = "",
                   gap=None) -> None:
    """Half-space spectrum (real part) against x; ``eigs`` has one row per x."""
    fig, ax = plt.subplots(figsize=(5, 4))
    xx = np.repeat(xs[:, None], eigs.shape[1], axis=1)
    ax.scatter(xx.ravel(), eigs.real.ravel(), s=1.5, c="k", lw=0)
    if gap is not None:
        pts = gap.sample(256)
        lo, hi = pts.real.min(), pts.real.max()
        ax.axhspan(lo, hi, color="tab:blue", alpha=0.08, lw=0)
    ax.set_xlim(0, 2 * np.pi)
    ax.set_xlabel("x")
    ax.set_ylabel("Re E")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def flow_figure(ts: np.ndarray, eigs: np.ndarray, path: str | Path, crossings=()) -> None:
    """Eigenvalue branches of a Hermitian path with zero crossings marked."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for b in range(eigs.shape[1]):
        ax.plot(ts, eigs[:, b], lw=1.2)
    ax.axhline(0, color="0.5", lw=0.8, ls="--")
    for c in crossings:
        ax.plot(c.t, 0, "v" if c.direction < 0 else "^", color="k", ms=5)
    ax.set_xlabel("t")
    ax.set_ylabel("eigenvalue")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
