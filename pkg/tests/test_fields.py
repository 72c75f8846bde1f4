import numpy as np
import pytest

from cavityvem.fields import AnalyticField, cavity_mode, gradient_bubble
from cavityvem.quadrature import polygon_quadrature
from helpers import random_star_polygon


@pytest.mark.parametrize("n,m,a,b", [(1, 1, 1.0, 1.0), (2, 3, 1.0, 1.1), (0, 1, 2.0, 1.0)])
def test_cavity_mode_divergence_via_divergence_theorem(rng, n, m, a, b):
    field = cavity_mode(n, m, a, b)
    vs = 0.2 + 0.5 * (random_star_polygon(rng) + 3.0) / 6.0  # keep inside the box
    pts, w = polygon_quadrature(vs, vs.mean(axis=0), 18)
    vol = w @ field.divergence(pts)
    # boundary flux with high-order Gauss per edge
    t, gw = np.polynomial.legendre.leggauss(24)
    flux = 0.0
    for l in range(len(vs)):
        p, q = vs[l], vs[(l + 1) % len(vs)]
        mid, half = 0.5 * (p + q), 0.5 * (q - p)
        epts = mid + np.outer(t, half)
        nrm = np.array([q[1] - p[1], p[0] - q[0]])
        nrm /= np.linalg.norm(nrm)
        ds = np.linalg.norm(half)
        flux += ds * (gw @ (field.values(epts) @ nrm))
    assert vol == pytest.approx(flux, rel=1e-10, abs=1e-12)


def test_cavity_mode_eigenvalue_and_name():
    field = cavity_mode(2, 3, 1.0, 1.1)
    expected = np.pi**2 * (4.0 + (3.0 / 1.1) ** 2)
    assert field.eigenvalue == pytest.approx(expected, rel=1e-14)
    assert "2" in field.name and "3" in field.name


def test_cavity_mode_satisfies_the_helmholtz_relation(rng):
    # -grad(div w) = lambda w pointwise for the analytic mode
    field = cavity_mode(1, 2, 1.0, 1.1)
    pts = rng.uniform(0.05, 0.9, (7, 2))
    eps = 1e-6
    dx = np.array([eps, 0.0])
    dy = np.array([0.0, eps])
    grad_div = np.column_stack(
        [
            (field.divergence(pts + dx) - field.divergence(pts - dx)) / (2 * eps),
            (field.divergence(pts + dy) - field.divergence(pts - dy)) / (2 * eps),
        ]
    )
    assert np.allclose(-grad_div, field.eigenvalue * field.values(pts), atol=1e-4)


def test_cavity_mode_normal_trace_vanishes_on_the_walls():
    a, b = 1.0, 1.1
    field = cavity_mode(2, 1, a, b)
    s = np.linspace(0.0, 1.0, 13)
    left = np.column_stack([np.zeros_like(s), b * s])
    right = np.column_stack([np.full_like(s, a), b * s])
    bottom = np.column_stack([a * s, np.zeros_like(s)])
    top = np.column_stack([a * s, np.full_like(s, b)])
    assert np.allclose(field.values(left)[:, 0], 0.0, atol=1e-14)
    assert np.allclose(field.values(right)[:, 0], 0.0, atol=1e-14)
    assert np.allclose(field.values(bottom)[:, 1], 0.0, atol=1e-14)
    assert np.allclose(field.values(top)[:, 1], 0.0, atol=1e-14)


def test_cavity_mode_rejects_the_zero_index_pair():
    with pytest.raises(ValueError):
        cavity_mode(0, 0)
    with pytest.raises(ValueError):
        cavity_mode(-1, 2)


def test_gradient_bubble_divergence_consistency(rng):
    field = gradient_bubble(1.0, 1.1)
    pts = rng.uniform(0.1, 0.8, (6, 2))
    eps = 1e-6
    dx = np.array([eps, 0.0])
    dy = np.array([0.0, eps])
    div_fd = (field.values(pts + dx)[:, 0] - field.values(pts - dx)[:, 0]) / (2 * eps) + (
        field.values(pts + dy)[:, 1] - field.values(pts - dy)[:, 1]
    ) / (2 * eps)
    assert np.allclose(div_fd, field.divergence(pts), atol=1e-5)
    assert field.eigenvalue is None


def test_analytic_field_is_immutable():
    field = cavity_mode(1, 1)
    with pytest.raises(Exception):
        field.name = "other"
