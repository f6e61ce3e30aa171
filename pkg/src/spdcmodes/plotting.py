"""Figure rendering for the CLI report paths.

Every emitted dataset gets a companion PNG next to the CSV/JSON payloads.
Uses the Agg backend so headless runs work; importing this module does not
require a display.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def spectrum_figure(path, curves: dict, xlabel="signal wavelength (nm)",
                    ylabel="|C|^2 (arb. units)") -> str:
    """Line plot of one |C|^2 curve per mode label: {label: (x, y)}."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, (x, y) in curves.items():
        ax.plot(x, y, label=label, lw=1.4)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def matrix_figure(path, matrix, row_labels, col_labels, title="",
                  xlabel="idler mode", ylabel="signal mode") -> str:
    """Heatmap of a probability or magnitude matrix."""
    m = np.asarray(matrix)
    fig, ax = plt.subplots(figsize=(0.35 * m.shape[1] + 2.8, 0.35 * m.shape[0] + 2.4))
    im = ax.imshow(m, cmap="viridis", origin="upper")
    ax.set_xticks(range(len(col_labels)), col_labels, rotation=90, fontsize=6)
    ax.set_yticks(range(len(row_labels)), row_labels, fontsize=6)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, shrink=0.85)
    return _finish(fig, path)


def sweep_figure(path, curves: dict, marks: dict | None = None) -> str:
    """P(w) per OAM order; optional {ell: (w, P)} markers for matched points."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for ell, (w_um, p) in sorted(curves.items()):
        ax.plot(w_um, p, label=f"|l|={ell}", lw=1.4)
    if marks:
        for ell, (w_um, p) in marks.items():
            ax.plot([w_um], [p], "o", ms=6, color="k")
    ax.set_xlabel("collection waist (um)")
    ax.set_ylabel("pair collection probability (arb. units)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def density_figure(path, matrix, labels, title="") -> str:
    """Absolute values of a density matrix with per-cell annotations."""
    m = np.abs(np.asarray(matrix))
    fig, ax = plt.subplots(figsize=(1.0 * m.shape[0] + 2.6, 1.0 * m.shape[0] + 2.0))
    im = ax.imshow(m, cmap="magma", vmin=0.0)
    names = [str(l) for l in labels]
    ax.set_xticks(range(len(names)), names, rotation=45, fontsize=8)
    ax.set_yticks(range(len(names)), names, fontsize=8)
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            ax.text(j, i, f"{m[i, j]:.2f}", ha="center", va="center",
                    color="w" if m[i, j] < 0.7 * m.max() else "k", fontsize=8)
    if title:
        ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, shrink=0.8)
    return _finish(fig, path)

