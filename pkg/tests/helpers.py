"""Shared test utilities: random geometry and independent quadrature oracles."""

import numpy as np

import cavityvem as cv


def random_star_polygon(rng, n_min=3, n_max=9):
    """Random polygon star-shaped with respect to an interior point.

    Vertices are placed at sorted random angles on random radii around a
    random center, which keeps the polygon star-shaped with respect to that
    center; a minimum angular gap avoids sliver edges and a maximum gap
    below pi keeps the center interior (a chord spanning more than half a
    turn would cut it off and could self-intersect).
    """
    n = int(rng.integers(n_min, n_max + 1))
    while True:
        angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, n))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2.0 * np.pi]]))
        if gaps.min() > 0.2 and gaps.max() < 2.6:
            break
    radii = rng.uniform(0.35, 1.0, n)
    scale = rng.uniform(0.2, 3.0)
    center = rng.uniform(-2.0, 2.0, 2)
    return center + scale * np.column_stack(
        [radii * np.cos(angles), radii * np.sin(angles)]
    )


def greens_moment(vertices, p, q):
    """Integral of x^p y^q over a polygon via the divergence theorem.

    Uses int x^p y^q dA = (1/(p+1)) oint x^(p+1) y^q n_x ds with Gauss
    quadrature along each edge; independent of the fan quadrature used in
    the library.
    """
    vs = np.asarray(vertices, dtype=float)
    n = len(vs)
    npts = (p + q + 2) // 2 + 2
    t, w = np.polynomial.legendre.leggauss(npts)
    total = 0.0
    for l in range(n):
        a, b = vs[l], vs[(l + 1) % n]
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        pts = mid + np.outer(t, half)
        # outward normal times ds for the counter-clockwise traversal
        nx_ds = (b[1] - a[1]) * 0.5
        total += nx_ds * (w @ (pts[:, 0] ** (p + 1) * pts[:, 1] ** q))
    return total / (p + 1)


def two_square_mesh():
    """Two unit squares sharing one vertical edge, the smallest closed-form case."""
    verts = np.array(
        [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0]]
    )
    cells = [[0, 1, 4, 3], [1, 2, 5, 4]]
    return cv.PolygonalMesh(verts, cells)


def unit_square_cell():
    """Counter-clockwise unit square with edges bottom, right, top, left."""
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def edge_flux_oracle(p, q, field, npts=24):
    """Total flux of a vector field through segment p -> q with the global
    orientation convention: the normal is the tangent from the lower towards
    the higher endpoint rotated by +90 degrees.

    Here p must be the lower endpoint in the global vertex ordering.
    """
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    t, w = np.polynomial.legendre.leggauss(npts)
    mid = 0.5 * (p + q)
    half = 0.5 * (q - p)
    pts = mid + np.outer(t, half)
    chord = q - p
    # +90 degree rotation of the tangent (tx, ty) is (-ty, tx)
    normal = np.array([-chord[1], chord[0]]) / np.linalg.norm(chord)
    ds = np.linalg.norm(half)
    vals = field.values(pts)
    return ds * (w @ (vals @ normal))
