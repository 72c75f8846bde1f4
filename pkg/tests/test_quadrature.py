import math

import numpy as np
import pytest

from cavityvem.quadrature import (
    edge_quadrature,
    gauss_edge,
    polygon_quadrature,
    triangle_rule,
)
from helpers import greens_moment, random_star_polygon


def test_gauss_edge_exact_for_odd_degree_polynomials():
    t, w = gauss_edge(4)
    assert w.sum() == pytest.approx(2.0, abs=1e-14)
    # an n-point rule integrates degree 2n-1 exactly on [-1, 1]
    for deg in range(8):
        exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
        assert w @ t**deg == pytest.approx(exact, abs=1e-14)


def test_gauss_edge_not_exact_beyond_design_degree():
    t, w = gauss_edge(2)
    assert abs(w @ t**4 - 2.0 / 5.0) > 1e-3


def test_triangle_rule_exact_on_reference_monomials():
    # int over {x, y >= 0, x + y <= 1} of x^a y^b = a! b! / (a + b + 2)!
    for degree in (1, 2, 4, 7):
        pts, w = triangle_rule(degree)
        assert np.all(w > 0)
        assert w.sum() == pytest.approx(0.5, abs=1e-14)
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                exact = (
                    math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
                )
                got = w @ (pts[:, 0] ** a * pts[:, 1] ** b)
                assert got == pytest.approx(exact, rel=1e-13, abs=1e-15)


def test_polygon_quadrature_matches_divergence_theorem_moments(rng):
    for _ in range(12):
        vs = random_star_polygon(rng)
        center = vs.mean(axis=0)
        pts, w = polygon_quadrature(vs, center, 6)
        for p in range(4):
            for q in range(4 - p):
                got = w @ (pts[:, 0] ** p * pts[:, 1] ** q)
                exact = greens_moment(vs, p, q)
                assert got == pytest.approx(exact, rel=1e-12, abs=1e-13)


def test_polygon_quadrature_weights_sum_to_area(rng):
    vs = random_star_polygon(rng)
    _, w = polygon_quadrature(vs, vs.mean(axis=0), 2)
    assert w.sum() == pytest.approx(greens_moment(vs, 0, 0), rel=1e-13)


def test_edge_quadrature_integrates_linears():
    p = np.array([1.0, 2.0])
    q = np.array([4.0, 6.0])
    pts, w = edge_quadrature(p, q, 3)
    length = 5.0
    assert w.sum() == pytest.approx(length, abs=1e-13)
    # int_e x ds = length * midpoint x
    assert w @ pts[:, 0] == pytest.approx(length * 2.5, abs=1e-12)
    assert w @ pts[:, 1] == pytest.approx(length * 4.0, abs=1e-12)
