"""Figure rendering for the CLI report paths.

Every plot function writes a PNG next to the delimited output it
illustrates and returns the path.  A non-interactive backend is forced so
the CLI works headless; PNG metadata is stripped for reproducible files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import WignerGrid
from .forward import Spectrogram
from .ladder import DensityMatrix

__all__ = [
    "save_spectrogram_plot",
    "save_density_matrix_plot",
    "save_wigner_plot",
    "save_temporal_density_plot",
    "save_benchmark_plot",
    "save_rabbitt_plot",
]

_SAVE_KW = dict(dpi=150, metadata={"Software": None})


def save_spectrogram_plot(s: Spectrogram, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    extent = [s.theta_grid[0], s.theta_grid[-1], s.window.n_min - 0.5, s.window.n_max + 0.5]
    im = ax.imshow(s.populations, aspect="auto", origin="lower", extent=extent,
                   cmap="inferno")
    ax.set_xlabel("relative phase (rad)")
    ax.set_ylabel("sideband index")
    fig.colorbar(im, ax=ax, label="population")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return Path(path)


def save_density_matrix_plot(rho: DensityMatrix, path) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    lo, hi = rho.window.n_min - 0.5, rho.window.n_max + 0.5
    for ax, data, label in ((axes[0], np.abs(rho.entries), "|rho|"),
                            (axes[1], np.angle(rho.entries), "arg rho")):
        im = ax.imshow(data, origin="lower", extent=[lo, hi, lo, hi],
                       cmap="viridis" if label.startswith("|") else "twilight")
        ax.set_xlabel("sideband index")
        ax.set_ylabel("sideband index")
        fig.colorbar(im, ax=ax, label=label)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return Path(path)


def save_wigner_plot(w: WignerGrid, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    vmax = float(np.abs(w.values).max()) or 1.0
    im = ax.imshow(w.values, aspect="auto", origin="lower",
                   extent=[w.times[0] * 1e15, w.times[-1] * 1e15,
                           w.energies[0], w.energies[-1]],
                   cmap="RdBu_r", vmin=-vmax, vmax=vmax)
    ax.set_xlabel("time (fs)")
    ax.set_ylabel("sideband index")
    fig.colorbar(im, ax=ax, label="W")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return Path(path)


def save_temporal_density_plot(times: np.ndarray, density: np.ndarray, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(times * 1e15, density, lw=1.5)
    ax.set_xlabel("time (fs)")
    ax.set_ylabel("density (period mean = 1)")
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return Path(path)


def save_benchmark_plot(rows, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ratios = [r.ratio for r in rows]
    means = [r.mean_error for r in rows]
    stds = [r.std_error for r in rows]
    ax.errorbar(ratios, means, yerr=stds, fmt="o-", capsize=3)
    ax.set_yscale("log")
    ax.set_xlabel("probe/pump coupling ratio")
    ax.set_ylabel("reconstruction error (Frobenius)")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return Path(path)


def save_rabbitt_plot(result, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    orders = sorted(result.cumulative_phases)
    phases = [result.cumulative_phases[n] for n in orders]
    ax.plot(orders, phases, "s-", label="retrieved")
    ax.set_xlabel("sideband index")
    ax.set_ylabel("cumulative phase (rad)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return Path(path)
