import numpy as np
import pytest
import sympy

from magelastic.algebra import exterior_derivative_at
from magelastic.errors import InvalidDegree
from magelastic.fields import (X, SmoothField, covariant_exterior_derivative, dot_wedge_field,
                               exterior_derivative_field, polynomial_vector_field, random_polynomial_field)
from magelastic.valued import VectorValuedForm, dot_wedge


@pytest.fixture
def points(rng):
    return rng.uniform(-1, 1, size=(20, 3))


def test_constant_stress_has_zero_divergence(points):
    sigma = SmoothField("covector", 2, np.arange(9).reshape(3, 3).tolist())
    assert np.abs(covariant_exterior_derivative(sigma).components(points)).max() == 0


@pytest.mark.parametrize("seed", range(4))
def test_leibniz_identity(seed, points):
    rng = np.random.default_rng(seed)
    sigma = random_polynomial_field("covector", 2, rng)
    u = random_polynomial_field("vector", 0, rng, max_degree=3)
    lhs = dot_wedge(covariant_exterior_derivative(sigma).value(points), u.value(points)).components
    pairing = dot_wedge_field(sigma, u)
    d_pairing = exterior_derivative_at(pairing.jacobian(points), 2)
    grad_u = VectorValuedForm(1, u.jacobian(points)[..., 0, :])
    rhs = d_pairing - dot_wedge(sigma.value(points), grad_u).components
    scale = max(1.0, np.abs(d_pairing).max())
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale


@pytest.mark.parametrize("seed", range(4))
def test_d_squared_vanishes(seed, points):
    u = random_polynomial_field("vector", 0, np.random.default_rng(seed), max_degree=4)
    ddu = covariant_exterior_derivative(covariant_exterior_derivative(u))
    assert ddu.exprs == sympy.zeros(3, 3)
    real = random_polynomial_field("real", 1, np.random.default_rng(seed), max_degree=3)
    assert np.abs(exterior_derivative_field(exterior_derivative_field(real)).components(points)).max() == 0


def test_gradient_of_polynomial(points):
    u = polynomial_vector_field(["x*y", "z**2", "x"])
    grad = covariant_exterior_derivative(u).components(points)
    x, y, z = points.T
    expected = np.zeros((len(points), 3, 3))
    expected[:, 0, 0], expected[:, 0, 1] = y, x
    expected[:, 1, 2] = 2 * z
    expected[:, 2, 0] = 1
    assert np.allclose(grad, expected)


def test_field_errors():
    with pytest.raises(ValueError):
        SmoothField("tensor", 0, [1])
    with pytest.raises(InvalidDegree):
        SmoothField("vector", 1, [[X[0]]] * 3)
    sigma = SmoothField("covector", 3, [[X[0]]] * 3)
    with pytest.raises(InvalidDegree):
        covariant_exterior_derivative(sigma)
    with pytest.raises(TypeError):
        covariant_exterior_derivative(SmoothField("real", 0, [X[0]]))
