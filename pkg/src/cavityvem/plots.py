"""Figure rendering: meshes, convergence histories, and pressure modes.

All functions render straight to files with the non-interactive Agg
backend, suitable for headless runs; they return the written path.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import PolyCollection

from .assembly import GlobalSystem
from .eigensolve import Spectrum, displacement_at_centroids, pressure_field
from .mesh import PolygonalMesh
from .study import ConvergenceReport

__all__ = ["plot_mesh", "plot_convergence", "plot_mode"]


def _cell_polys(mesh: PolygonalMesh) -> list[np.ndarray]:
    return [mesh.cell_vertices(ci) for ci in range(mesh.n_cells)]


def plot_mesh(mesh: PolygonalMesh, path: str, color_by: np.ndarray | None = None) -> str:
    """Draw the polygonal mesh, optionally coloring cells by a quality value."""
    fig, ax = plt.subplots(figsize=(5, 5))
    polys = PolyCollection(_cell_polys(mesh), edgecolors="black", linewidths=0.6)
    if color_by is not None:
        polys.set_array(np.asarray(color_by, dtype=float))
        polys.set_cmap("viridis")
    else:
        polys.set_facecolor("0.92")
    ax.add_collection(polys)
    if color_by is not None:
        fig.colorbar(polys, ax=ax, shrink=0.85)
    ax.autoscale()
    ax.set_aspect("equal")
    ax.set_title(f"{mesh.n_cells} cells, {mesh.n_edges} edges")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_convergence(report: ConvergenceReport, path: str) -> str:
    """Log-log eigenvalue errors against 1/N with a second-order guide."""
    cfg = report.config
    fig, ax = plt.subplots(figsize=(6, 4.5))
    hs = 1.0 / np.asarray(cfg.levels, dtype=float)
    for family in cfg.families:
        for sigma in cfg.sigmas:
            vals = report.values(family, sigma)
            for m in range(cfg.modes):
                err = np.abs(vals[:, m] - report.exact[m])
                label = f"{family}, sigma={sigma:g}, mode {m + 1}"
                ax.loglog(hs, np.where(err > 0, err, np.nan), "o-", label=label)
    ref = err[-1] if err[-1] > 0 else 1e-4
    guide = ref * (hs / hs[-1]) ** 2
    ax.loglog(hs, guide, "k--", label="order 2")
    ax.set_xlabel("1/N")
    ax.set_ylabel("|scaled eigenvalue error|")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_mode(
    system: GlobalSystem,
    spectrum: Spectrum,
    index: int,
    path: str,
    quiver: bool = True,
) -> str:
    """Pressure field of one computed mode with the displacement arrows."""
    if not 0 <= index < spectrum.vectors.shape[1]:
        raise ValueError(f"mode index {index} out of range")
    vec = spectrum.vectors[:, index]
    mesh = system.mesh
    pressure = pressure_field(system, vec)[:, 0]
    fig, ax = plt.subplots(figsize=(5.5, 5))
    polys = PolyCollection(_cell_polys(mesh), edgecolors="none")
    polys.set_array(pressure)
    polys.set_cmap("RdBu_r")
    lim = float(np.abs(pressure).max()) or 1.0
    polys.set_clim(-lim, lim)
    ax.add_collection(polys)
    fig.colorbar(polys, ax=ax, shrink=0.85, label="pressure")
    if quiver:
        disp = displacement_at_centroids(system, vec)
        cents = np.array(
            [system.mesh.geometry(ci).centroid for ci in range(mesh.n_cells)]
        )
        step = max(1, mesh.n_cells // 400)
        ax.quiver(
            cents[::step, 0], cents[::step, 1],
            disp[::step, 0], disp[::step, 1],
            color="black", width=0.003, alpha=0.8,
        )
    lam = spectrum.scaled[index]
    ax.set_aspect("equal")
    ax.autoscale()
    ax.set_title(f"mode {index + 1}: scaled eigenvalue {lam:.4f}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
