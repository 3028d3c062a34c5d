from math import factorial

import numpy as np
import pytest

from magelastic.quadrature import line_rule, tet_rule, triangle_rule


def monomials(dim, degree):
    if dim == 1:
        return [(a,) for a in range(degree + 1)]
    return [(a,) + rest for a in range(degree + 1) for rest in monomials(dim - 1, degree - a)]


def simplex_moment(exponents):
    """Average of prod x_i^a_i over the reference simplex (Dirichlet integral oracle)."""
    d = len(exponents)
    num = np.prod([factorial(a) for a in exponents])
    return num * factorial(d) / factorial(sum(exponents) + d)


@pytest.mark.parametrize("rule, dim", [(line_rule, 1), (triangle_rule, 2), (tet_rule, 3)])
@pytest.mark.parametrize("degree", [1, 2, 4, 6])
def test_rules_integrate_polynomials_exactly(rule, dim, degree):
    bary, w = rule(degree)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(bary.sum(axis=1), 1.0)
    coords = bary[:, 1:]
    for exps in monomials(dim, degree):
        val = np.sum(w * np.prod(coords ** np.array(exps), axis=1))
        assert val == pytest.approx(simplex_moment(exps), rel=1e-12, abs=1e-15)


def test_points_inside_simplex():
    bary, _ = tet_rule(6)
    assert np.all(bary >= 0)
