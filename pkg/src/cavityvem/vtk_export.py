"""Legacy ASCII VTK export of polygonal meshes and computed eigenmodes."""

from __future__ import annotations

import numpy as np

from .assembly import GlobalSystem
from .eigensolve import displacement_at_centroids, pressure_field
from .mesh import PolygonalMesh

__all__ = ["write_vtk", "export_eigenfunction", "read_vtk_counts"]


def write_vtk(
    path: str,
    mesh: PolygonalMesh,
    cell_scalars: dict[str, np.ndarray] | None = None,
    cell_vectors: dict[str, np.ndarray] | None = None,
    title: str = "polygonal mesh",
) -> None:
    """Write an unstructured grid of polygons with optional cell data."""
    cell_scalars = cell_scalars or {}
    cell_vectors = cell_vectors or {}
    nc = mesh.n_cells
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{x:.16g} {y:.16g} 0")
    total = sum(len(loop) + 1 for loop in mesh.cells)
    lines.append(f"CELLS {nc} {total}")
    for loop in mesh.cells:
        lines.append(" ".join([str(len(loop))] + [str(i) for i in loop]))
    lines.append(f"CELL_TYPES {nc}")
    lines.extend(["7"] * nc)  # VTK_POLYGON
    if cell_scalars or cell_vectors:
        lines.append(f"CELL_DATA {nc}")
        for name, data in cell_scalars.items():
            data = np.asarray(data, dtype=float)
            if len(data) != nc:
                raise ValueError(f"scalar field {name!r} has wrong length")
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.16g}" for v in data)
        for name, data in cell_vectors.items():
            data = np.asarray(data, dtype=float)
            if data.shape != (nc, 2):
                raise ValueError(f"vector field {name!r} has wrong shape")
            lines.append(f"VECTORS {name} double")
            lines.extend(f"{vx:.16g} {vy:.16g} 0" for vx, vy in data)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def export_eigenfunction(system: GlobalSystem, vector: np.ndarray, path: str) -> None:
    """Export one eigenvector as cellwise pressure and centroid displacement.

    The pressure is -div(w_h) evaluated at the cell centroid (a constant per
    cell at the lowest order) and the displacement is the projected field at
    the centroid.
    """
    coeffs = pressure_field(system, vector)
    pressure = coeffs[:, 0]  # higher scaled monomials vanish at the centroid
    disp = displacement_at_centroids(system, vector)
    write_vtk(
        path,
        system.mesh,
        cell_scalars={"pressure": pressure},
        cell_vectors={"displacement": disp},
        title="acoustic cavity eigenmode",
    )


def read_vtk_counts(path: str) -> dict:
    """Parse the counts and cell-data names back from a legacy ASCII file."""
    info = {"points": 0, "cells": 0, "scalars": [], "vectors": []}
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "POINTS":
                info["points"] = int(parts[1])
            elif parts[0] == "CELLS":
                info["cells"] = int(parts[1])
            elif parts[0] == "SCALARS":
                info["scalars"].append(parts[1])
            elif parts[0] == "VECTORS":
                info["vectors"].append(parts[1])
    return info
