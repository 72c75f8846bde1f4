"""Quadrature rules for polygons, triangles and edges.

Polygon integration fans the polygon into triangles around a chosen center
and applies a product Gauss rule on each triangle that is exact up to the
requested polynomial degree, so every integral of a polynomial integrand
used by the element operators is exact to rounding.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["gauss_edge", "triangle_rule", "polygon_quadrature", "edge_quadrature"]


@lru_cache(maxsize=64)
def gauss_edge(npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], exact to degree 2*npts - 1."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return x, w


@lru_cache(maxsize=64)
def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature on the reference triangle (0,0)-(1,0)-(0,1).

    Collapsed Gauss-Legendre product rule. The Duffy map x = u, y = v(1-u)
    carries a Jacobian (1-u), so exactness to `degree` needs Gauss points for
    degree + 1 in each direction. Weights are strictly positive and sum to 1/2.

    Returns
    -------
    points : (n, 2) array
    weights : (n,) array
    """
    m = (degree + 3) // 2 + 1
    t, w = np.polynomial.legendre.leggauss(m)
    u = 0.5 * (t + 1.0)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    WU, WV = np.meshgrid(wu, wu, indexing="ij")
    pts = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
    wts = (WU * WV * (1.0 - U)).ravel()
    return pts, wts


def polygon_quadrature(
    vertices: np.ndarray, center: np.ndarray, degree: int
) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature over a simple polygon, exact for polynomials up to `degree`.

    The polygon is fanned into triangles (center, v_i, v_{i+1}). For star
    shaped polygons the center must lie in the kernel so the signed triangle
    areas stay positive; a convex polygon accepts any interior center.

    Returns
    -------
    points : (n, 2) array
    weights : (n,) array, summing to the polygon area
    """
    vs = np.asarray(vertices, dtype=float)
    c = np.asarray(center, dtype=float)
    ref_pts, ref_wts = triangle_rule(degree)
    pts = []
    wts = []
    n = len(vs)
    for i in range(n):
        p, q = vs[i], vs[(i + 1) % n]
        jac = (p[0] - c[0]) * (q[1] - c[1]) - (q[0] - c[0]) * (p[1] - c[1])
        mapped = c + np.outer(ref_pts[:, 0], p - c) + np.outer(ref_pts[:, 1], q - c)
        pts.append(mapped)
        wts.append(ref_wts * jac)
    return np.vstack(pts), np.concatenate(wts)


def edge_quadrature(p: np.ndarray, q: np.ndarray, npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss points and weights on segment p -> q (weights sum to its length)."""
    t, w = gauss_edge(npts)
    pts = 0.5 * np.outer(1.0 - t, p) + 0.5 * np.outer(1.0 + t, q)
    length = float(np.hypot(*(q - p)))
    return pts, 0.5 * length * w
