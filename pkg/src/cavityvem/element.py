"""Local operators of the divergence-conforming virtual element on one polygon.

The local space on a polygon E collects the rotor-free H(div) fields whose
edge-normal traces are polynomials of degree k and whose divergence lies in
P_k(E). Its degrees of freedom are

* edge moments  int_e (v.n) q ds  against an orthogonal Legendre basis q of
  P_k(e) on every edge (outward normal, k+1 per edge), and
* volume moments  int_E v.grad(m) dx  against the non-constant scaled
  monomials m of degree <= k (the quotient by constants realized through
  gradients, so no explicit zero-mean shift is ever needed).

Everything below is exact-arithmetic linear algebra on top of polynomial
moments of the cell: the divergence of a field, its L2 projection onto
gradients of P_{k+1}, the divergence stiffness, and the stabilized mass
bilinear form are all computable from the degrees of freedom alone.

Scaled monomials m_alpha = ((x-x_E)/h_E)^a1 ((y-y_E)/h_E)^a2 are centered at
the cell centroid and scaled by the cell diameter, ordered by graded
lexicographic exponent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .mesh import ElementGeometry, element_geometry, _is_simple
from .quadrature import edge_quadrature, polygon_quadrature

__all__ = [
    "monomial_exponents",
    "polygon_moments",
    "DofLayout",
    "LocalOperators",
    "divergence_matrix",
    "local_stiffness",
    "projector_matrices",
    "stabilization_matrix",
    "local_mass",
]


def monomial_exponents(degree: int) -> list[tuple[int, int]]:
    """Exponent pairs of the 2D monomials up to `degree`, graded lexicographic."""
    return [(d - j, j) for d in range(degree + 1) for j in range(d + 1)]


def n_monomials(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


def eval_monomials(pts: np.ndarray, degree: int, center: np.ndarray, h: float) -> np.ndarray:
    """Values of all scaled monomials up to `degree` at `pts`, shape (npts, nmono)."""
    X = (np.atleast_2d(pts) - center) / h
    px = np.stack([X[:, 0] ** d for d in range(degree + 1)])
    py = np.stack([X[:, 1] ** d for d in range(degree + 1)])
    return np.column_stack([px[a1] * py[a2] for a1, a2 in monomial_exponents(degree)])


def eval_monomial_gradients(
    pts: np.ndarray, degree: int, center: np.ndarray, h: float
) -> np.ndarray:
    """Gradients of all scaled monomials up to `degree` at `pts`, shape (npts, nmono, 2)."""
    X = (np.atleast_2d(pts) - center) / h
    px = np.stack([X[:, 0] ** d for d in range(degree + 1)])
    py = np.stack([X[:, 1] ** d for d in range(degree + 1)])
    out = np.zeros((len(X), n_monomials(degree), 2))
    for t, (a1, a2) in enumerate(monomial_exponents(degree)):
        if a1 > 0:
            out[:, t, 0] = a1 * px[a1 - 1] * py[a2] / h
        if a2 > 0:
            out[:, t, 1] = a2 * px[a1] * py[a2 - 1] / h
    return out


def polygon_moments(vertices: np.ndarray, max_degree: int) -> np.ndarray:
    """Integrals over the polygon of every scaled monomial up to `max_degree`.

    Exact to rounding: the polygon is fanned into triangles around the
    centroid and integrated with a rule matching `max_degree`. The signed
    fan decomposition is exact for any fan center, so star-shapedness is
    not required here. Non-simple polygons are rejected.
    """
    vs = np.asarray(vertices, dtype=float)
    if not _is_simple(vs):
        raise ValueError("non-simple polygon")
    geo = element_geometry(vs)
    pts, wts = polygon_quadrature(vs, geo.centroid, max_degree)
    V = eval_monomials(pts, max_degree, geo.centroid, geo.diameter)
    return wts @ V


@dataclass(frozen=True)
class DofLayout:
    """Index bookkeeping: all edge moments first, then the volume moments."""

    k: int
    n_edges: int

    @property
    def n_edge_dofs(self) -> int:
        return self.n_edges * (self.k + 1)

    @property
    def n_internal_dofs(self) -> int:
        return n_monomials(self.k) - 1

    @property
    def n_dofs(self) -> int:
        return self.n_edge_dofs + self.n_internal_dofs

    def edge_dof(self, edge: int, moment: int) -> int:
        return edge * (self.k + 1) + moment

    def internal_dof(self, s: int) -> int:
        """Dof index of the volume moment against the s-th monomial (s >= 1)."""
        return self.n_edge_dofs + s - 1


class LocalOperators:
    """All local matrices of one cell.

    Parameters
    ----------
    geometry : ElementGeometry
    k : polynomial degree of the space (k = 0 is the lowest order)
    sigma : stabilization weight, must be >= 0
    edge_directions : optional array of +-1 per edge; +1 parametrizes the
        edge moments along the counter-clockwise traversal, -1 reverses it.
        Global assembly passes the directions of the shared-edge convention;
        standalone elements default to +1.

    Attributes
    ----------
    H : (n_k, n_k) mass matrix of the P_k monomials
    D : (n_k, n_dofs) monomial coefficients of div(phi_j)
    stiffness : (n_dofs, n_dofs) divergence-divergence matrix D^T H D
    G : (n_g, n_g) Gram matrix of the gradients of the non-constant
        monomials up to degree k+1
    R : (n_g, n_dofs) moments int_E phi_j . grad(m_a), from dofs alone
    proj_coeff : (n_g, n_dofs) gradient-basis coefficients of the projection
    proj_dof : (n_dofs, n_dofs) projection expressed dof-to-dof
    mass : (n_dofs, n_dofs) stabilized local mass matrix
    """

    def __init__(
        self,
        geometry: ElementGeometry,
        k: int = 0,
        sigma: float = 1.0,
        edge_directions: np.ndarray | None = None,
    ):
        if k < 0:
            raise ValueError("polynomial degree k must be >= 0")
        if sigma < 0:
            raise ValueError("stabilization weight must be >= 0")
        self.geometry = geometry
        self.k = k
        self.sigma = float(sigma)
        ne = geometry.n_edges
        self.layout = DofLayout(k, ne)
        self.directions = (
            np.ones(ne) if edge_directions is None else np.asarray(edge_directions, dtype=float)
        )

        nk = n_monomials(k)
        nk1 = n_monomials(k + 1)
        ng = nk1 - 1
        nd = self.layout.n_dofs
        c, h = geometry.centroid, geometry.diameter
        exps = monomial_exponents(k + 1)

        mom = polygon_moments(geometry.vertices, 2 * (k + 2))
        idx = {e: i for i, e in enumerate(monomial_exponents(2 * (k + 2)))}

        def moment(a1: int, a2: int) -> float:
            return mom[idx[(a1, a2)]]

        # polynomial mass matrices: products of scaled monomials are again
        # scaled monomials, so entries are plain moment lookups
        self.H = np.array(
            [[moment(a[0] + b[0], a[1] + b[1]) for b in exps[:nk]] for a in exps[:nk]]
        )
        M2 = np.array(
            [[moment(a[0] + b[0], a[1] + b[1]) for b in exps[:nk]] for a in exps]
        )

        G = np.zeros((ng, ng))
        for i, a in enumerate(exps[1:]):
            for j, b in enumerate(exps[1:]):
                val = 0.0
                if a[0] and b[0]:
                    val += a[0] * b[0] * moment(a[0] + b[0] - 2, a[1] + b[1])
                if a[1] and b[1]:
                    val += a[1] * b[1] * moment(a[0] + b[0], a[1] + b[1] - 2)
                G[i, j] = val / h**2
        self.G = G

        # edge ingredients: traces of the dof basis are scaled Legendre
        # polynomials, (2i+1)/|e| per unit moment
        npts = k + 2
        E = np.zeros((nk1, nd))          # boundary moments of m_a against phi_j . n
        DG = np.zeros((nd, ng))          # dofs of the gradient basis fields
        vs = geometry.vertices
        for l in range(ne):
            p, q = vs[l], vs[(l + 1) % ne]
            pts, wts = edge_quadrature(p, q, npts)
            t, _ = np.polynomial.legendre.leggauss(npts)
            leg = np.polynomial.legendre.legvander(self.directions[l] * t, k)
            mono = eval_monomials(pts, k + 1, c, h)
            grads = eval_monomial_gradients(pts, k + 1, c, h)
            gn = grads @ geometry.outward_normals[l]
            elen = geometry.edge_lengths[l]
            for i in range(k + 1):
                j = self.layout.edge_dof(l, i)
                scale = (2 * i + 1) / elen
                E[:, j] = scale * (wts * leg[:, i]) @ mono
                DG[j, :] = (wts * leg[:, i]) @ gn[:, 1:]
        for s in range(1, nk):
            DG[self.layout.internal_dof(s), :] = G[s - 1, :]

        # divergence from the dofs: H c = boundary moments - volume pairings
        P_int = np.zeros((nk, nd))
        for s in range(1, nk):
            P_int[s, self.layout.internal_dof(s)] = 1.0
        self.D = sla.solve(self.H, E[:nk] - P_int, assume_a="pos")

        self.R = -M2[1:] @ self.D + E[1:]
        self.proj_coeff = sla.solve(G, self.R, assume_a="pos")
        self.grad_dofs = DG
        self.proj_dof = DG @ self.proj_coeff

        self.stiffness = self.D.T @ self.H @ self.D
        Q = np.eye(nd) - self.proj_dof
        self.mass = self.proj_coeff.T @ G @ self.proj_coeff + self.sigma * Q.T @ Q

    @property
    def stab(self) -> np.ndarray:
        """Stabilizing inner product on the dofs, sigma times the identity."""
        return self.sigma * np.eye(self.layout.n_dofs)

    def projection_field(self, dofs: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Evaluate the projected polynomial field of a dof vector at points."""
        coeff = self.proj_coeff @ dofs
        grads = eval_monomial_gradients(
            pts, self.k + 1, self.geometry.centroid, self.geometry.diameter
        )
        return np.tensordot(grads[:, 1:, :], coeff, axes=(1, 0))

    def divergence_coeffs(self, dofs: np.ndarray) -> np.ndarray:
        """Monomial coefficients of div(v_h) for a local dof vector."""
        return self.D @ dofs


def divergence_matrix(vertices: np.ndarray, k: int = 0) -> np.ndarray:
    """Monomial coefficients of the divergence of each dof basis field."""
    return LocalOperators(element_geometry(vertices), k, 0.0).D


def local_stiffness(vertices: np.ndarray, k: int = 0) -> np.ndarray:
    """Exact divergence-divergence matrix of one cell."""
    return LocalOperators(element_geometry(vertices), k, 0.0).stiffness


def projector_matrices(vertices: np.ndarray, k: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(G, coefficient projector, dof projector) of one cell."""
    ops = LocalOperators(element_geometry(vertices), k, 0.0)
    return ops.G, ops.proj_coeff, ops.proj_dof


def stabilization_matrix(vertices: np.ndarray, k: int = 0, sigma: float = 1.0) -> np.ndarray:
    """Dof-space stabilization matrix sigma * I; rejects negative sigma."""
    return LocalOperators(element_geometry(vertices), k, sigma).stab


def local_mass(vertices: np.ndarray, k: int = 0, sigma: float = 1.0) -> np.ndarray:
    """Stabilized local mass matrix of the cell."""
    return LocalOperators(element_geometry(vertices), k, sigma).mass
