"""Interpolation onto the virtual space and numerical checks of its theory.

The interpolant of a smooth rotor-free field is defined dof-by-dof: edge
moments of the normal trace against Legendre polynomials and volume moments
against monomial gradients. Three families of diagnostics are provided:

* the commuting property: the divergence of the interpolant equals the
  polynomial L2 projection of the divergence, cell by cell;
* pointwise reconstruction of virtual fields (they are gradients of a
  potential with polynomial Laplacian and polynomial Neumann data, so a
  linear finite element solve on a refined fan submesh recovers them to any
  desired accuracy);
* mesh-refinement studies of the interpolation error in the field, its
  polynomial projection, and its divergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import DofMap, build_dof_map
from .element import (
    LocalOperators,
    eval_monomials,
    n_monomials,
)
from .fields import AnalyticField
from .mesh import PolygonalMesh, element_geometry, generators
from .quadrature import gauss_edge, polygon_quadrature, triangle_rule

__all__ = [
    "interpolate",
    "CommutingReport",
    "commuting_residual",
    "CellEvaluator",
    "cell_evaluator",
    "VirtualField",
    "virtual_evaluate",
    "InterpolationStudy",
    "interpolation_rate_study",
]


def interpolate(
    mesh: PolygonalMesh,
    field: AnalyticField,
    k: int = 0,
    dofmap: DofMap | None = None,
    edge_points: int = 8,
    volume_degree: int = 14,
) -> np.ndarray:
    """Dof vector of the interpolant of a smooth field.

    Without an explicit dof map, every edge moment is kept (unconstrained
    space). Passing the constrained map of an assembled system interpolates
    into the rigid-wall space instead; the field should then have a
    vanishing normal trace for the interpolant to be meaningful.
    """
    if dofmap is None:
        dofmap = build_dof_map(mesh, k, constrained=False)
    vals = np.zeros(dofmap.n_dofs)

    npts = max(edge_points, k + 2)
    t, w = gauss_edge(npts)
    leg = np.polynomial.legendre.legvander(t, k)
    for e, (u, v) in enumerate(mesh.edges):
        base = dofmap.edge_base[e]
        if base < 0:
            continue
        p, q = mesh.vertices[u], mesh.vertices[v]
        chord = q - p
        length = float(np.hypot(*chord))
        normal = np.array([-chord[1], chord[0]]) / length
        pts = 0.5 * np.outer(1.0 - t, p) + 0.5 * np.outer(1.0 + t, q)
        vn = field.values(pts) @ normal
        ds = 0.5 * length * w
        for i in range(k + 1):
            vals[base + i] = (ds * leg[:, i]) @ vn

    if k >= 1:
        from .element import eval_monomial_gradients

        for ci in range(mesh.n_cells):
            geo = element_geometry(mesh.cell_vertices(ci))
            pts, wts = polygon_quadrature(geo.vertices, geo.centroid, volume_degree)
            grads = eval_monomial_gradients(pts, k, geo.centroid, geo.diameter)
            fv = field.values(pts)
            dot = np.einsum("pd,psd->ps", fv, grads)
            mom = wts @ dot
            base = dofmap.cell_base[ci]
            vals[base : base + n_monomials(k) - 1] = mom[1:]
    return vals


def local_dof_values(dofmap: DofMap, ci: int, vec: np.ndarray) -> np.ndarray:
    """Gather a global dof vector into one cell's local convention."""
    idx, sgn, _ = dofmap.cell_dofs(ci)
    out = np.zeros(len(idx))
    inside = idx >= 0
    out[inside] = sgn[inside] * vec[idx[inside]]
    return out


def _ops_for(mesh, dofmap, ci, k, cache) -> LocalOperators:
    vs = mesh.cell_vertices(ci)
    geo = element_geometry(vs)
    _, _, dirs = dofmap.cell_dofs(ci)
    key = (k, tuple(np.round((vs - geo.centroid).ravel(), 12)), tuple(dirs[: geo.n_edges]))
    if key not in cache:
        cache[key] = LocalOperators(geo, k, 0.0, dirs[: geo.n_edges])
    return cache[key]


@dataclass
class CommutingReport:
    """Cellwise L2 norms of div(interpolant) minus the projected divergence."""

    per_cell: np.ndarray
    max_norm: float
    global_norm: float
    reference_norm: float    # L2 norm of the projected divergence, for scaling


def commuting_residual(
    mesh: PolygonalMesh,
    field: AnalyticField,
    k: int = 0,
    dofs: np.ndarray | None = None,
    dofmap: DofMap | None = None,
    quad_degree: int = 14,
) -> CommutingReport:
    """Check div(v_I) = P_k(div v) cell by cell.

    Both sides are polynomials of degree k on each cell, so the difference
    is measured exactly through the local monomial Gram matrix; only the
    projection of the smooth divergence uses (high order) quadrature.
    """
    if dofmap is None:
        dofmap = build_dof_map(mesh, k, constrained=False)
    if dofs is None:
        dofs = interpolate(mesh, field, k, dofmap)
    cache: dict = {}
    per = np.empty(mesh.n_cells)
    ref = 0.0
    for ci in range(mesh.n_cells):
        ops = _ops_for(mesh, dofmap, ci, k, cache)
        geo = element_geometry(mesh.cell_vertices(ci))
        local = local_dof_values(dofmap, ci, dofs)
        c_int = ops.D @ local
        pts, wts = polygon_quadrature(geo.vertices, geo.centroid, quad_degree)
        mono = eval_monomials(pts, k, geo.centroid, geo.diameter)
        rhs = (wts * field.divergence(pts)) @ mono
        c_proj = sla.solve(ops.H, rhs, assume_a="pos")
        diff = c_int - c_proj
        per[ci] = float(np.sqrt(max(diff @ ops.H @ diff, 0.0)))
        ref += float(c_proj @ ops.H @ c_proj)
    return CommutingReport(
        per_cell=per,
        max_norm=float(per.max()),
        global_norm=float(np.sqrt((per**2).sum())),
        reference_norm=float(np.sqrt(max(ref, 0.0))),
    )


class CellEvaluator:
    """Pointwise reconstruction of virtual fields on one polygon.

    A virtual field is grad(phi) with a degree-k polynomial Laplacian and a
    polynomial normal derivative on each edge, both read off the dofs. The
    potential is computed once and for all for the whole dof basis with
    conforming linear elements on a fan submesh (each fan triangle split
    `refine` times per direction), pinned by a zero-mean constraint. What is
    stored is a single linear map from local dof values to the gradient at
    every submesh triangle centroid, so repeated evaluations are one matrix
    product. Accuracy improves like (diameter/refine)^2.
    """

    def __init__(
        self,
        vertices: np.ndarray,
        k: int = 0,
        edge_directions: np.ndarray | None = None,
        refine: int = 4,
    ):
        vs = np.asarray(vertices, dtype=float)
        geo = element_geometry(vs)
        ne = geo.n_edges
        if edge_directions is None:
            edge_directions = np.ones(ne)
        self.geometry = geo
        self.k = k
        self.refine = int(refine)
        ops = LocalOperators(geo, k, 0.0, edge_directions)
        self.layout = ops.layout
        r = self.refine
        c = geo.centroid

        nodes: list[np.ndarray] = []
        key_of: dict[tuple[float, float], int] = {}

        def nid(p: np.ndarray) -> int:
            key = (round(float(p[0]), 12), round(float(p[1]), 12))
            if key not in key_of:
                key_of[key] = len(nodes)
                nodes.append(p)
            return key_of[key]

        tris: list[tuple[int, int, int]] = []
        edge_chains: list[list[int]] = []
        for l in range(ne):
            p, q = vs[l], vs[(l + 1) % ne]
            ids = {}
            for i in range(r + 1):
                for j in range(r + 1 - i):
                    ids[(i, j)] = nid(c + (i / r) * (p - c) + (j / r) * (q - c))
            for i in range(r):
                for j in range(r - i):
                    tris.append((ids[(i, j)], ids[(i + 1, j)], ids[(i, j + 1)]))
                    if i + j < r - 1:
                        tris.append((ids[(i + 1, j)], ids[(i + 1, j + 1)], ids[(i, j + 1)]))
            edge_chains.append([ids[(r - m, m)] for m in range(r + 1)])

        pts_arr = np.array(nodes)
        tri_arr = np.array(tris)
        nv, nt = len(pts_arr), len(tri_arr)
        pa = pts_arr[tri_arr[:, 0]]
        pb = pts_arr[tri_arr[:, 1]]
        pc = pts_arr[tri_arr[:, 2]]
        area2 = (pb[:, 0] - pa[:, 0]) * (pc[:, 1] - pa[:, 1]) - (pc[:, 0] - pa[:, 0]) * (
            pb[:, 1] - pa[:, 1]
        )
        opp = np.stack([pc - pb, pa - pc, pb - pa], axis=1)            # (nt, 3, 2)
        grads = np.stack([-opp[..., 1], opp[..., 0]], axis=-1)          # rotate +90
        grads /= area2[:, None, None]
        areas = 0.5 * area2

        rows, cols, vals = [], [], []
        for i in range(3):
            for j in range(3):
                rows.append(tri_arr[:, i])
                cols.append(tri_arr[:, j])
                vals.append(areas * np.einsum("td,td->t", grads[:, i], grads[:, j]))
        A = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(nv, nv),
        ).tocsr()
        cvec = np.zeros(nv)
        for i in range(3):
            np.add.at(cvec, tri_arr[:, i], areas / 3.0)
        kkt = sp.bmat([[A, cvec[:, None]], [cvec[None, :], None]], format="csc")
        lu = spla.splu(kkt)

        nd = self.layout.n_dofs
        rhs = np.zeros((nv + 1, nd))

        # Neumann data: the dof basis trace on edge l is (2i+1)/|e| P_i
        gq, gw = gauss_edge(k + 2)
        for l in range(ne):
            chain = edge_chains[l]
            elen = geo.edge_lengths[l]
            seg = elen / r
            for m in range(r):
                xi0 = -1.0 + 2.0 * m / r
                xi = xi0 + (gq + 1.0) / r              # Legendre parameter on [-1, 1]
                u = 0.5 * (gq + 1.0)                    # hat parameter on the segment
                dsw = 0.5 * seg * gw
                leg = np.polynomial.legendre.legvander(edge_directions[l] * xi, k)
                for i in range(k + 1):
                    j = self.layout.edge_dof(l, i)
                    tr = (2 * i + 1) / elen * leg[:, i]
                    rhs[chain[m], j] += dsw @ (tr * (1.0 - u))
                    rhs[chain[m + 1], j] += dsw @ (tr * u)

        # volume data: minus the divergence integrated against the hats
        ref_pts, ref_wts = triangle_rule(k + 1)
        lam = np.column_stack([1.0 - ref_pts.sum(axis=1), ref_pts[:, 0], ref_pts[:, 1]])
        for t in range(nt):
            mapped = (
                pa[t]
                + np.outer(ref_pts[:, 0], pb[t] - pa[t])
                + np.outer(ref_pts[:, 1], pc[t] - pa[t])
            )
            w = ref_wts * area2[t]
            div = eval_monomials(mapped, k, c, geo.diameter) @ ops.D
            for i in range(3):
                rhs[tri_arr[t, i]] -= (w * lam[:, i]) @ div

        phi = lu.solve(rhs)[:nv]
        # dof -> gradient samples, one constant gradient per subtriangle
        self.sample_map = np.einsum("tid,tin->tdn", grads, phi[tri_arr])  # (nt, 2, nd)
        self.centroids = (pa + pb + pc) / 3.0
        self.weights = areas
        self.nodes = pts_arr
        self.triangles = tri_arr

    def samples(self, local_dofs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gradient samples at the submesh centroids: (points, weights, values)."""
        vals = self.sample_map @ np.asarray(local_dofs, dtype=float)
        return self.centroids, self.weights, vals

    def average(self, local_dofs: np.ndarray) -> np.ndarray:
        """Cell average of the virtual field (exact for the submesh surrogate)."""
        _, w, v = self.samples(local_dofs)
        return (w @ v) / w.sum()


_eval_cache: dict = {}


def cell_evaluator(
    vertices: np.ndarray,
    k: int = 0,
    edge_directions: np.ndarray | None = None,
    refine: int = 4,
) -> tuple[CellEvaluator, np.ndarray]:
    """Shared evaluator for the congruence class of a polygon.

    Returns the evaluator built on centroid-relative coordinates together
    with the centroid shift of this particular cell; congruent translated
    cells reuse one reconstruction.
    """
    vs = np.asarray(vertices, dtype=float)
    geo = element_geometry(vs)
    rel = vs - geo.centroid
    dirs = np.ones(geo.n_edges) if edge_directions is None else np.asarray(edge_directions)
    key = (k, refine, tuple(np.round(rel.ravel(), 12)), tuple(dirs))
    if key not in _eval_cache:
        _eval_cache[key] = CellEvaluator(rel, k, dirs, refine)
    return _eval_cache[key], geo.centroid


@dataclass
class VirtualField:
    """A global dof vector with cached pointwise reconstruction per cell."""

    mesh: PolygonalMesh
    dofmap: DofMap
    dofs: np.ndarray
    k: int = 0
    refine: int = 4

    def cell_samples(self, ci: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        _, _, dirs = self.dofmap.cell_dofs(ci)
        vs = self.mesh.cell_vertices(ci)
        ev, shift = cell_evaluator(vs, self.k, dirs[: len(vs)], self.refine)
        pts, wts, vals = ev.samples(local_dof_values(self.dofmap, ci, self.dofs))
        return pts + shift, wts, vals

    def l2_error_against(self, field: AnalyticField) -> float:
        total = 0.0
        for ci in range(self.mesh.n_cells):
            pts, wts, vals = self.cell_samples(ci)
            total += wts @ ((field.values(pts) - vals) ** 2).sum(axis=1)
        return float(np.sqrt(max(total, 0.0)))


def virtual_evaluate(
    mesh: PolygonalMesh,
    dofs: np.ndarray,
    k: int = 0,
    dofmap: DofMap | None = None,
    refine: int = 4,
) -> VirtualField:
    """Wrap a dof vector for pointwise evaluation of the underlying field."""
    if dofmap is None:
        dofmap = build_dof_map(mesh, k, constrained=False)
    if len(dofs) != dofmap.n_dofs:
        raise ValueError("dof vector does not match the dof map")
    return VirtualField(mesh, dofmap, np.asarray(dofs, dtype=float), k, refine)


@dataclass
class InterpolationStudy:
    """Interpolation errors under refinement with least-squares rates."""

    family: str
    levels: tuple
    h: np.ndarray
    l2_error: np.ndarray          # field minus reconstructed interpolant
    projected_error: np.ndarray   # field minus projected interpolant
    divergence_error: np.ndarray  # divergence gap, equals the projection error
    commuting_max: np.ndarray     # worst cell commuting residual per level
    rate_l2: float
    rate_projected: float
    rate_divergence: float


def _ls_rate(h: np.ndarray, err: np.ndarray) -> float:
    keep = err > 0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(h[keep]), np.log(err[keep]), 1)[0])


def interpolation_rate_study(
    field: AnalyticField,
    family: str = "rect",
    levels: tuple = (4, 8, 16, 32),
    k: int = 0,
    a: float = 1.0,
    b: float = 1.0,
    refine: int = 3,
    quad_degree: int = 12,
) -> InterpolationStudy:
    """Measure interpolation errors of a smooth field on a mesh family."""
    gen = generators[family]
    hs, e_l2, e_proj, e_div, comm = [], [], [], [], []
    for n in levels:
        mesh = gen(a, b, n)
        dofmap = build_dof_map(mesh, k, constrained=False)
        dofs = interpolate(mesh, field, k, dofmap)
        vf = virtual_evaluate(mesh, dofs, k, dofmap, refine)
        cache: dict = {}
        tot_proj = 0.0
        tot_div = 0.0
        hmax = 0.0
        for ci in range(mesh.n_cells):
            ops = _ops_for(mesh, dofmap, ci, k, cache)
            geo = element_geometry(mesh.cell_vertices(ci))
            hmax = max(hmax, geo.diameter)
            local = local_dof_values(dofmap, ci, dofs)
            qpts, qwts = polygon_quadrature(geo.vertices, geo.centroid, quad_degree)
            pv = ops.projection_field(local, qpts)
            tot_proj += qwts @ ((field.values(qpts) - pv) ** 2).sum(axis=1)
            dv = eval_monomials(qpts, k, geo.centroid, geo.diameter) @ (ops.D @ local)
            tot_div += qwts @ (field.divergence(qpts) - dv) ** 2
        rep = commuting_residual(mesh, field, k, dofs, dofmap)
        hs.append(hmax)
        e_l2.append(vf.l2_error_against(field))
        e_proj.append(float(np.sqrt(max(tot_proj, 0.0))))
        e_div.append(float(np.sqrt(max(tot_div, 0.0))))
        comm.append(rep.max_norm)
    hs = np.array(hs)
    e_l2 = np.array(e_l2)
    e_proj = np.array(e_proj)
    e_div = np.array(e_div)
    return InterpolationStudy(
        family=family,
        levels=tuple(levels),
        h=hs,
        l2_error=e_l2,
        projected_error=e_proj,
        divergence_error=e_div,
        commuting_max=np.array(comm),
        rate_l2=_ls_rate(hs, e_l2),
        rate_projected=_ls_rate(hs, e_proj),
        rate_divergence=_ls_rate(hs, e_div),
    )
