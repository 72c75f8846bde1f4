"""Global assembly of the stiffness/mass pair with boundary dofs eliminated.

Global unknowns are the edge moments of the internal edges (the rigid-wall
condition v.n = 0 removes every boundary edge moment at the space level)
followed by the per-cell volume moments. Edge moments are stated in the
global convention: normal traces against the global edge normal, Legendre
parameter running from the lower-index to the higher-index vertex. A local
dof equals the global one times the cell's incidence sign, so scattering a
local matrix only needs that sign; the Legendre parametrization is aligned
by handing each cell the matching edge directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.io import mmwrite

from .element import DofLayout, LocalOperators, n_monomials
from .mesh import PolygonalMesh, element_geometry

__all__ = [
    "DofMap",
    "GlobalSystem",
    "build_dof_map",
    "assemble",
    "kernel_dimension_oracle",
    "export_system",
]


@dataclass
class DofMap:
    """Mapping from (cell, local dof) to global dof index and sign."""

    mesh: PolygonalMesh
    k: int
    edge_base: np.ndarray      # (n_edges,) global base index, -1 on the boundary
    cell_base: np.ndarray      # (n_cells,) base of the volume-moment block
    n_dofs: int

    def cell_dofs(self, ci: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Global indices (-1 where eliminated), signs, and edge directions."""
        mesh, k = self.mesh, self.k
        edges = mesh.cell_edges[ci]
        signs = mesh.cell_edge_signs[ci]
        layout = DofLayout(k, len(edges))
        idx = np.full(layout.n_dofs, -1, dtype=int)
        sgn = np.ones(layout.n_dofs)
        for l, (e, s) in enumerate(zip(edges, signs)):
            base = self.edge_base[e]
            if base < 0:
                continue
            for i in range(k + 1):
                idx[layout.edge_dof(l, i)] = base + i
                sgn[layout.edge_dof(l, i)] = s
        for s_ in range(1, n_monomials(k)):
            idx[layout.internal_dof(s_)] = self.cell_base[ci] + s_ - 1
        return idx, sgn, -signs


def build_dof_map(mesh: PolygonalMesh, k: int = 0, constrained: bool = True) -> DofMap:
    """Number the free dofs: edge moments first, then cell moments.

    With ``constrained`` (the default) boundary-edge moments are eliminated
    by the rigid-wall condition; the interpolation utilities pass False to
    keep every edge moment as an unknown.
    """
    edge_base = np.full(mesh.n_edges, -1, dtype=int)
    nxt = 0
    for e in range(mesh.n_edges):
        if not (constrained and mesh.boundary_edge[e]):
            edge_base[e] = nxt
            nxt += k + 1
    n_int = n_monomials(k) - 1
    cell_base = nxt + n_int * np.arange(mesh.n_cells)
    return DofMap(mesh, k, edge_base, cell_base, nxt + n_int * mesh.n_cells)


@dataclass
class GlobalSystem:
    """Assembled pencil K (divergence stiffness) and M (stabilized mass)."""

    K: sp.csr_matrix
    M: sp.csr_matrix
    dofmap: DofMap
    mesh: PolygonalMesh
    k: int
    sigma: float
    _ops_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_dofs(self) -> int:
        return self.dofmap.n_dofs

    def local_ops(self, ci: int) -> LocalOperators:
        key = _shape_key(self.mesh, ci, self.k, self.sigma, self.dofmap)
        if key not in self._ops_cache:
            _, _, dirs = self.dofmap.cell_dofs(ci)
            geo = element_geometry(self.mesh.cell_vertices(ci))
            ne = geo.n_edges
            self._ops_cache[key] = LocalOperators(geo, self.k, self.sigma, dirs[:ne])
        return self._ops_cache[key]

    def local_dof_values(self, ci: int, vec: np.ndarray) -> np.ndarray:
        """Gather a free-dof vector into the local dof vector of one cell."""
        idx, sgn, _ = self.dofmap.cell_dofs(ci)
        out = np.zeros(len(idx))
        inside = idx >= 0
        out[inside] = sgn[inside] * vec[idx[inside]]
        return out


def _shape_key(mesh: PolygonalMesh, ci: int, k: int, sigma: float, dofmap: DofMap):
    vs = mesh.cell_vertices(ci)
    geo = element_geometry(vs)
    rel = np.round((vs - geo.centroid).ravel(), 12)
    _, _, dirs = dofmap.cell_dofs(ci)
    return (k, sigma, tuple(rel), tuple(dirs[: geo.n_edges]))


def assemble(
    mesh: PolygonalMesh, k: int = 0, sigma: float = 1.0, constrained: bool = True
) -> GlobalSystem:
    """Assemble the global eigenvalue pencil on a mesh.

    Congruent cells with matching edge directions share one local operator
    evaluation, which keeps structured families cheap. Triplets are
    accumulated in deterministic cell order. ``constrained=False`` keeps the
    boundary-edge moments as unknowns (useful for scatter checks; the
    eigenproblem itself always eliminates them).
    """
    dofmap = build_dof_map(mesh, k, constrained=constrained)
    n = dofmap.n_dofs
    cache: dict = {}
    rows, cols, vk, vm = [], [], [], []
    for ci in range(mesh.n_cells):
        key = _shape_key(mesh, ci, k, sigma, dofmap)
        if key not in cache:
            geo = element_geometry(mesh.cell_vertices(ci))
            _, _, dirs = dofmap.cell_dofs(ci)
            cache[key] = LocalOperators(geo, k, sigma, dirs[: geo.n_edges])
        ops = cache[key]
        idx, sgn, _ = dofmap.cell_dofs(ci)
        keep = np.flatnonzero(idx >= 0)
        gi = idx[keep]
        sc = sgn[keep]
        Kl = ops.stiffness[np.ix_(keep, keep)] * np.outer(sc, sc)
        Ml = ops.mass[np.ix_(keep, keep)] * np.outer(sc, sc)
        r = np.repeat(gi, len(gi))
        c = np.tile(gi, len(gi))
        rows.append(r)
        cols.append(c)
        vk.append(Kl.ravel())
        vm.append(Ml.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    K = sp.coo_matrix((np.concatenate(vk), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((np.concatenate(vm), (rows, cols)), shape=(n, n)).tocsr()
    system = GlobalSystem(K, M, dofmap, mesh, k, sigma)
    system._ops_cache.update(cache)
    return system


def kernel_dimension_oracle(K: sp.spmatrix | np.ndarray, tol_factor: float = 1e-10) -> int:
    """Kernel dimension of K by dense column-pivoted QR rank revelation.

    Intended for cross-checking the zero cluster of the eigensolver on
    moderate problems; refuses matrices too large to densify safely.
    """
    n = K.shape[0]
    if n > 5000:
        raise ValueError("rank oracle limited to n <= 5000")
    A = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
    r = sla.qr(A, mode="r", pivoting=True)[0]
    d = np.abs(np.diag(r))
    if d[0] == 0.0:
        return n
    return n - int((d > tol_factor * d[0]).sum())


def export_system(system: GlobalSystem, prefix: str) -> tuple[str, str]:
    """Write the assembled pencil in Matrix Market format, returns the paths."""
    kpath, mpath = f"{prefix}.K.mtx", f"{prefix}.M.mtx"
    mmwrite(kpath, sp.coo_matrix(system.K))
    mmwrite(mpath, sp.coo_matrix(system.M))
    return kpath, mpath
