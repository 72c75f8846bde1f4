"""Polygonal meshes of rectangular cavities: generators, topology, quality checks.

A mesh stores vertices and counter-clockwise cell loops. Edge topology is
derived, never stored: edges are the sorted vertex pairs (a, b) with a < b,
numbered lexicographically, and each (cell, edge) incidence carries a sign
that is +1 exactly when the cell's outward normal coincides with the global
edge normal. The global normal convention rotates the unit tangent running
from the lower-index to the higher-index vertex by +90 degrees.

The three structured families index refinement by N, the number of cells
that meet each edge of the rectangle: an N x N grid of rectangles, the same
grid with each rectangle split along its lower-left to upper-right diagonal,
and a brick-laid tiling of stretched hexagons clipped to the rectangle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "PolygonalMesh",
    "ElementGeometry",
    "MeshQualityReport",
    "generate_rectangular",
    "generate_triangular",
    "generate_hexagonal",
    "generators",
    "check_mesh_assumptions",
]


@dataclass
class ElementGeometry:
    """Geometric data of one polygonal cell used by the local operators."""

    vertices: np.ndarray        # (n, 2), counter-clockwise
    area: float
    centroid: np.ndarray        # (2,)
    diameter: float
    edge_lengths: np.ndarray    # (n,)
    outward_normals: np.ndarray  # (n, 2), unit, edge l runs vertex l -> l+1

    @property
    def n_edges(self) -> int:
        return len(self.vertices)


def _cross2(u: np.ndarray, v: np.ndarray) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _polygon_area_centroid(vs: np.ndarray) -> tuple[float, np.ndarray]:
    x, y = vs[:, 0], vs[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area == 0.0:
        return 0.0, vs.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return float(area), np.array([cx, cy])


def _is_simple(vs: np.ndarray) -> bool:
    """Check that no two non-adjacent edges of the polygon intersect."""
    n = len(vs)
    segs = [(vs[i], vs[(i + 1) % n]) for i in range(n)]

    def hits(s1, s2):
        p, q = s1
        r, s = s2
        d1 = _cross2(q - p, r - p)
        d2 = _cross2(q - p, s - p)
        d3 = _cross2(s - r, p - r)
        d4 = _cross2(s - r, q - r)
        return (d1 * d2 < 0) and (d3 * d4 < 0)

    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if hits(segs[i], segs[j]):
                return False
    return True


def element_geometry(vs: np.ndarray) -> ElementGeometry:
    """Build the geometry record for one counter-clockwise polygon."""
    vs = np.asarray(vs, dtype=float)
    area, centroid = _polygon_area_centroid(vs)
    if area <= 0.0:
        raise ValueError("cell polygon must be counter-clockwise with positive area")
    d = vs[:, None, :] - vs[None, :, :]
    diameter = float(np.sqrt((d ** 2).sum(-1)).max())
    tang = np.roll(vs, -1, axis=0) - vs
    lengths = np.hypot(tang[:, 0], tang[:, 1])
    # CCW traversal: outward normal is the tangent rotated by -90 degrees
    normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / lengths[:, None]
    return ElementGeometry(vs, area, centroid, diameter, lengths, normals)


class PolygonalMesh:
    """Vertices plus counter-clockwise polygonal cells with derived edge topology.

    Parameters
    ----------
    vertices : (nv, 2) array
    cells : list of vertex index loops; loops with negative signed area are
        reoriented, degenerate or self-intersecting loops are rejected.
    """

    def __init__(self, vertices: np.ndarray, cells: list[list[int]]):
        self.vertices = np.asarray(vertices, dtype=float)
        self.cells = []
        for loop in cells:
            loop = [int(i) for i in loop]
            if len(loop) < 3 or len(set(loop)) != len(loop):
                raise ValueError(f"degenerate cell loop {loop}")
            vs = self.vertices[loop]
            area, _ = _polygon_area_centroid(vs)
            if area < 0:
                loop = loop[::-1]
                vs = vs[::-1]
            if not _is_simple(vs):
                raise ValueError("self-intersecting cell polygon")
            self.cells.append(loop)
        self._build_topology()

    def _build_topology(self) -> None:
        incident: dict[tuple[int, int], list[int]] = {}
        for ci, loop in enumerate(self.cells):
            n = len(loop)
            for l in range(n):
                u, w = loop[l], loop[(l + 1) % n]
                key = (u, w) if u < w else (w, u)
                incident.setdefault(key, []).append(ci)
        keys = sorted(incident)
        bad = [k for k in keys if len(incident[k]) > 2]
        if bad:
            raise ValueError(f"edge shared by more than two cells: {bad[0]}")
        eid = {k: i for i, k in enumerate(keys)}
        self.edges = np.array(keys, dtype=int).reshape(-1, 2)
        self.edge_cells = [incident[k] for k in keys]
        self.boundary_edge = np.array([len(incident[k]) == 1 for k in keys])
        self.cell_edges = []
        self.cell_edge_signs = []
        for loop in self.cells:
            n = len(loop)
            ids = np.empty(n, dtype=int)
            signs = np.empty(n, dtype=float)
            for l in range(n):
                u, w = loop[l], loop[(l + 1) % n]
                key = (u, w) if u < w else (w, u)
                ids[l] = eid[key]
                # traversal from the higher-index vertex means the outward
                # normal agrees with the global edge normal
                signs[l] = 1.0 if u == key[1] else -1.0
            self.cell_edges.append(ids)
            self.cell_edge_signs.append(signs)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def cell_vertices(self, ci: int) -> np.ndarray:
        return self.vertices[self.cells[ci]]

    def geometry(self, ci: int) -> ElementGeometry:
        return element_geometry(self.cell_vertices(ci))

    def total_area(self) -> float:
        return sum(_polygon_area_centroid(self.cell_vertices(ci))[0] for ci in range(self.n_cells))

    def to_json(self, path: str) -> None:
        doc = {
            "vertices": [[float(x), float(y)] for x, y in self.vertices],
            "cells": [list(map(int, loop)) for loop in self.cells],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh)

    @classmethod
    def from_json(cls, path: str) -> "PolygonalMesh":
        with open(path) as fh:
            doc = json.load(fh)
        return cls(np.asarray(doc["vertices"], dtype=float), doc["cells"])


def generate_rectangular(a: float, b: float, n: int) -> PolygonalMesh:
    """N x N grid of congruent rectangles on (0, a) x (0, b)."""
    _check_params(a, b, n)
    xs = np.linspace(0.0, a, n + 1)
    ys = np.linspace(0.0, b, n + 1)
    verts = np.column_stack([np.tile(xs, n + 1), np.repeat(ys, n + 1)])
    cells = []
    for j in range(n):
        for i in range(n):
            v0 = j * (n + 1) + i
            cells.append([v0, v0 + 1, v0 + n + 2, v0 + n + 1])
    return PolygonalMesh(verts, cells)


def generate_triangular(a: float, b: float, n: int) -> PolygonalMesh:
    """Rectangular grid split along lower-left to upper-right diagonals, 2 N^2 cells."""
    _check_params(a, b, n)
    rect = generate_rectangular(a, b, n)
    cells = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
            cells.append([v00, v10, v11])
            cells.append([v00, v11, v01])
    return PolygonalMesh(rect.vertices, cells)


def generate_hexagonal(a: float, b: float, n: int) -> PolygonalMesh:
    """Brick-laid hexagon tiling clipped to (0, a) x (0, b).

    Pointy-top hexagons of width a/N are stretched so that rows of centers
    sit on the horizontal lines y = i*b/N: exactly N cells meet the bottom
    and top edges, and boundary rows are clipped to pentagons and corner
    quadrilaterals. All clip coordinates land on lattice points, so no
    sliver cells are produced; zero-area clip remainders are dropped.
    Needs N >= 2 to fit one interior row of full hexagons.
    """
    _check_params(a, b, n)
    if n < 2:
        raise ValueError("hexagonal family needs n >= 2")
    w = a / n
    v = b / (3.0 * n)          # half-height of the vertical sides, cap height equals v
    pitch = 3.0 * v

    verts: list[list[float]] = []
    vid: dict[tuple[int, int], int] = {}

    def node(x: float, y: float) -> int:
        # every coordinate is a multiple of w/2 or v, snap keys to that lattice
        key = (round(2.0 * x / w), round(y / v))
        if key not in vid:
            vid[key] = len(verts)
            verts.append([x, y])
        return vid[key]

    cells = []
    for i in range(n + 1):
        yc = i * pitch
        if i % 2 == 0:
            xcs = [w / 2 + j * w for j in range(n)]
        else:
            xcs = [j * w for j in range(n + 1)]
        for xc in xcs:
            hexa = [
                (xc + w / 2, yc - v),
                (xc + w / 2, yc + v),
                (xc, yc + 2 * v),
                (xc - w / 2, yc + v),
                (xc - w / 2, yc - v),
                (xc, yc - 2 * v),
            ]
            poly = _clip_to_rect(hexa, a, b)
            if poly is not None:
                cells.append([node(x, y) for x, y in poly])
    return PolygonalMesh(np.asarray(verts), cells)


def _clip_to_rect(poly, a: float, b: float):
    """Sutherland-Hodgman clip against [0,a] x [0,b]; None when nothing is left."""

    def clip(pts, axis, bound, keep_le):
        out = []
        n = len(pts)
        for i in range(n):
            p, q = pts[i], pts[(i + 1) % n]
            pin = (p[axis] <= bound) if keep_le else (p[axis] >= bound)
            qin = (q[axis] <= bound) if keep_le else (q[axis] >= bound)
            if pin:
                out.append(p)
            if pin != qin:
                t = (bound - p[axis]) / (q[axis] - p[axis])
                x = p[0] + t * (q[0] - p[0])
                y = p[1] + t * (q[1] - p[1])
                if axis == 0:
                    x = bound
                else:
                    y = bound
                out.append((x, y))
        return out

    pts = list(poly)
    for axis, bound, keep_le in ((0, 0.0, False), (0, a, True), (1, 0.0, False), (1, b, True)):
        pts = clip(pts, axis, bound, keep_le)
        if not pts:
            return None
    dedup = []
    for p in pts:
        if not dedup or abs(p[0] - dedup[-1][0]) > 1e-13 or abs(p[1] - dedup[-1][1]) > 1e-13:
            dedup.append(p)
    while len(dedup) > 1 and abs(dedup[0][0] - dedup[-1][0]) < 1e-13 and abs(dedup[0][1] - dedup[-1][1]) < 1e-13:
        dedup.pop()
    if len(dedup) < 3:
        return None
    area = 0.0
    for i in range(len(dedup)):
        x1, y1 = dedup[i]
        x2, y2 = dedup[(i + 1) % len(dedup)]
        area += x1 * y2 - x2 * y1
    if abs(area) < 1e-13 * a * b:
        return None
    return dedup


def _check_params(a: float, b: float, n: int) -> None:
    if a <= 0 or b <= 0:
        raise ValueError("cavity sides must be positive")
    if n < 1:
        raise ValueError("refinement index must be at least 1")


generators = {
    "rect": generate_rectangular,
    "tri": generate_triangular,
    "hex": generate_hexagonal,
}


@dataclass
class MeshQualityReport:
    """Shape-regularity measurements backing the mesh assumptions.

    edge_ratio is min over cells of (shortest edge / cell diameter);
    star_ratio is min over cells of (largest kernel ball radius / diameter),
    with the ball center obtained as the Chebyshev center of the edge
    half-plane intersection. Both stay bounded away from zero on shape
    regular families.
    """

    edge_ratio: float
    star_ratio: float
    worst_edge_cell: int
    worst_star_cell: int
    star_center_found: bool
    cell_edge_ratio: np.ndarray = field(repr=False)
    cell_star_ratio: np.ndarray = field(repr=False)

    @property
    def regularity_constant(self) -> float:
        return min(self.edge_ratio, self.star_ratio)


def _chebyshev_radius(vs: np.ndarray) -> float:
    """Radius of the largest ball inside the intersection of edge half-planes."""
    geo = element_geometry(vs)
    n = geo.outward_normals
    bvec = (n * vs).sum(axis=1)
    A = np.column_stack([n, np.ones(len(vs))])
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=A, b_ub=bvec, bounds=[(None, None)] * 2 + [(0, None)], method="highs")
    if not res.success:
        return -1.0
    return float(res.x[2])


def check_mesh_assumptions(mesh: PolygonalMesh) -> MeshQualityReport:
    """Measure shape regularity: edge/diameter and star-ball/diameter ratios."""
    n_cells = mesh.n_cells
    edge_ratio = np.empty(n_cells)
    star_ratio = np.empty(n_cells)
    cache: dict[tuple, tuple[float, float]] = {}
    ok = True
    for ci in range(n_cells):
        vs = mesh.cell_vertices(ci)
        geo = element_geometry(vs)
        key = tuple(np.round((vs - geo.centroid).ravel() / geo.diameter, 12))
        if key not in cache:
            r = _chebyshev_radius(vs)
            cache[key] = (float(geo.edge_lengths.min() / geo.diameter), r / geo.diameter)
        er, sr = cache[key]
        if sr < 0:
            ok = False
        edge_ratio[ci] = er
        star_ratio[ci] = sr
    return MeshQualityReport(
        edge_ratio=float(edge_ratio.min()),
        star_ratio=float(star_ratio.min()),
        worst_edge_cell=int(edge_ratio.argmin()),
        worst_star_cell=int(star_ratio.argmin()),
        star_center_found=ok,
        cell_edge_ratio=edge_ratio,
        cell_star_ratio=star_ratio,
    )
