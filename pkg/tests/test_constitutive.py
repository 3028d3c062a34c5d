import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from magelastic.algebra import Metric, PCovector, wedge
from magelastic.constitutive import (IsotropicElastic, MagnetoElasticEnergy, d1_energy, d2_energy,
                                     decompose_energy, deformed_metric, elastic_energy_density, elastic_stress,
                                     magnetic_energy_density, magnetic_field_intensity, maxwell_stress,
                                     model_b_magnetic_energy, tangent_matrix)
from magelastic.errors import InvalidMaterial, StrainTooLarge
from magelastic.valued import VectorValuedForm, dot_wedge, hodge_flat, identity_form

I3 = np.eye(3)
SKEW = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
COUPLED = ("model_a", "model_b_linearized", "model_b")


def vv1(a):
    return VectorValuedForm(1, np.asarray(a, dtype=float))


def two(b):
    return PCovector(2, np.asarray(b, dtype=float))


def scalar(form):
    return float(np.asarray(form.components)[..., 0])


@pytest.mark.parametrize("eps, lam, mu, expected", [
    (I3, 2.0, 1.0, 12.0),
    (np.zeros((3, 3)), 3.0, 2.0, 0.0),
    (SKEW, 5.0, 3.0, 0.0),
])
def test_elastic_energy_examples(eps, lam, mu, expected):
    val = scalar(elastic_energy_density(IsotropicElastic(lam, mu), Metric.euclidean(), vv1(eps)))
    assert val == pytest.approx(expected, abs=1e-14)


def test_elastic_stress_examples():
    G = Metric.euclidean()
    sig = elastic_stress(IsotropicElastic(1.0, 1.0), G, vv1(I3))
    assert np.allclose(sig.components, 5 * hodge_flat(G, identity_form()).components)
    assert np.abs(elastic_stress(IsotropicElastic(1.0, 1.0), G, vv1(SKEW)).components).max() == 0


@given(arrays(float, (3, 3), elements=st.floats(-1, 1)), st.floats(0.1, 5), st.floats(0.1, 5))
def test_energy_nonnegative_and_blind_to_rotations(E, lam, mu):
    mat = IsotropicElastic(lam, mu)
    G = Metric.euclidean()
    sym_part = 0.5 * (E + E.T)
    val = scalar(elastic_energy_density(mat, G, vv1(E)))
    assert val >= -1e-12
    assert val == pytest.approx(scalar(elastic_energy_density(mat, G, vv1(sym_part))), abs=1e-12)


@given(arrays(float, (3, 3), elements=st.floats(-1, 1)), arrays(float, (3, 3), elements=st.floats(-1, 1)))
def test_antisymmetric_variation_is_blind(E, A):
    G = Metric(np.diag([2.0, 1.0, 0.5]))
    W = A - G.inverse @ A.T @ G.g  # G-antisymmetric
    sig = elastic_stress(IsotropicElastic(1.3, 0.7), G, vv1(E))
    assert abs(scalar(dot_wedge(sig, vv1(W)))) <= 1e-12 * max(1.0, np.abs(E).max() * np.abs(W).max() * 10)


def test_invalid_materials():
    with pytest.raises(InvalidMaterial):
        IsotropicElastic(1.0, 0.0)
    with pytest.raises(InvalidMaterial):
        IsotropicElastic(-1.0, 1.0)
    with pytest.raises(InvalidMaterial):
        MagnetoElasticEnergy(None, -1.0)
    with pytest.raises(InvalidMaterial):
        MagnetoElasticEnergy(None, 1.0, "model_c")
    with pytest.raises(InvalidMaterial):
        magnetic_energy_density(0.0, Metric.euclidean(), two([1, 0, 0]))


@pytest.mark.parametrize("r, phi, h", [(1.0, 0.5, [0, 0, 1]), (2.0, 1.0, [0, 0, 2])])
def test_magnetic_examples(r, phi, h):
    G, b = Metric.euclidean(), two([1.0, 0.0, 0.0])
    assert scalar(magnetic_energy_density(r, G, b)) == pytest.approx(phi)
    assert np.allclose(magnetic_field_intensity(r, G, b).components, h)


def central_error(f, x, dx, exact, h):
    return abs((f(x + h * dx) - f(x - h * dx)) / (2 * h) - exact)


def observed_order(errs, hs):
    return np.polyfit(np.log(hs), np.log(errs), 1)[0]


HS = np.array([1e-3, 1e-4, 1e-5])


def test_elastic_stress_matches_fd(rng):
    G = Metric(np.diag([2.0, 1.0, 0.5]))
    mat = IsotropicElastic(1.3, 0.7)
    E, dE = rng.normal(size=(2, 3, 3))
    exact = scalar(dot_wedge(elastic_stress(mat, G, vv1(E)), vv1(dE)))

    def f(x):
        return scalar(elastic_energy_density(mat, G, vv1(x)))

    # quadratic energy: central differences are exact up to roundoff
    assert max(central_error(f, E, dE, exact, h) for h in HS) <= 1e-8 * abs(exact)
    remainder = [abs(f(E + h * dE) - f(E) - h * exact) for h in HS]
    assert observed_order(remainder, HS) == pytest.approx(2.0, abs=0.1)


def test_field_intensity_matches_fd(rng):
    G = Metric(np.diag([2.0, 1.0, 0.5]))
    b, db = rng.normal(size=(2, 3))
    exact = scalar(wedge(magnetic_field_intensity(1.7, G, two(b)), two(db)))

    def f(x):
        return scalar(magnetic_energy_density(1.7, G, two(x)))

    assert max(central_error(f, b, db, exact, h) for h in HS) <= 1e-8 * abs(exact)


@pytest.mark.parametrize("coupling", ["model_b", "model_b_linearized"])
def test_model_b_d1_matches_fd(coupling, rng):
    G = Metric(np.diag([1.5, 1.0, 0.8]))
    model = MagnetoElasticEnergy(IsotropicElastic(1.0, 0.5), 1.2, coupling, G)
    E, dE = rng.normal(size=(2, 3, 3)) * np.array([[0.05], [1.0]])[:, :, None]
    b = two(rng.normal(size=3))
    exact = scalar(dot_wedge(d1_energy(model, vv1(E), b), vv1(dE)))

    def f(x):
        return scalar(model.energy(vv1(x), b))

    errs = [central_error(f, E, dE, exact, h) for h in HS[:2]]
    assert observed_order(errs, HS[:2]) == pytest.approx(2.0, abs=0.2)
    fd = d1_energy(model, vv1(E), b, method="fd")
    assert np.allclose(fd.components, d1_energy(model, vv1(E), b).components, atol=1e-7)


def test_maxwell_stress_tension():
    r, B = 1.5, 2.0
    S = maxwell_stress(r, Metric.euclidean(), vv1(np.zeros((3, 3))), two([B, 0, 0]))
    e3 = VectorValuedForm(0, np.array([[0.0], [0.0], [1.0]]))
    assert np.allclose(dot_wedge(S, e3).components, [0.5 * r * B ** 2, 0, 0])
    zero = maxwell_stress(r, Metric.euclidean(), vv1(I3), two([0, 0, 0]))
    assert np.abs(zero.components).max() == 0


@given(arrays(float, 3, elements=st.floats(-2, 2)), st.floats(-3, 3), arrays(float, (3, 3), elements=st.floats(-1, 1)))
def test_maxwell_stress_quadratic_and_strain_blind(b, c, E):
    G = Metric.euclidean()
    S = maxwell_stress(0.8, G, vv1(np.zeros((3, 3))), two(b))
    Sc = maxwell_stress(0.8, G, vv1(E), two(c * b))
    assert np.allclose(Sc.components, c ** 2 * S.components, atol=1e-12)


def test_deformed_metric_examples(rng):
    G = Metric.euclidean()
    assert np.array_equal(deformed_metric(G, vv1(np.zeros((3, 3)))).g, G.g)
    assert np.allclose(deformed_metric(G, vv1(0.1 * I3)).g, 1.21 * I3)
    E = rng.normal(size=(3, 3)) * 0.1
    F = I3 + E
    assert np.allclose(deformed_metric(G, vv1(E)).g, F.T @ F, atol=1e-15)
    assert np.allclose(deformed_metric(G, vv1(E), include_quadratic=False).g, I3 + E + E.T)


@given(arrays(float, (3, 3), elements=st.floats(-0.1, 0.1)))
def test_deformed_metric_spd_for_small_strain(E):
    assert np.all(np.linalg.eigvalsh(deformed_metric(Metric.euclidean(), vv1(E)).g) > 0)


@pytest.mark.parametrize("c", [0.05, -0.1, 0.2])
def test_model_b_energy_uniform_dilation(c):
    # Gh = (1+c)^2 I: sqrt det = (1+c)^3, inverse = (1+c)^-2, so the 2-form star scales by 1/(1+c)
    r = 1.3
    val = scalar(model_b_magnetic_energy(r, Metric.euclidean(), vv1(c * I3), two([1, 0, 0])))
    assert val == pytest.approx(0.5 * r / (1 + c), rel=1e-14)


def test_model_b_at_zero_strain_matches_plain(rng):
    G, b = Metric.euclidean(), two(rng.normal(size=3))
    zero = vv1(np.zeros((3, 3)))
    assert scalar(model_b_magnetic_energy(0.7, G, zero, b)) == pytest.approx(
        scalar(magnetic_energy_density(0.7, G, b)), rel=1e-15)
    model = MagnetoElasticEnergy(IsotropicElastic(1, 1), 0.7, "model_b")
    assert np.allclose(d2_energy(model, zero, b).components, magnetic_field_intensity(0.7, G, b).components)


def test_strain_guard():
    model = MagnetoElasticEnergy(IsotropicElastic(1, 1), 1.0, "model_b")
    with pytest.raises(StrainTooLarge):
        model.energy(vv1(0.5 * I3), two([1, 0, 0]))
    with pytest.raises(StrainTooLarge):
        deformed_metric(Metric.euclidean(), vv1(-1.0 * I3))


def test_model_a_is_separable(rng):
    model = MagnetoElasticEnergy(IsotropicElastic(1.1, 0.9), 1.4, "model_a")
    E1, E2 = rng.normal(size=(2, 3, 3))
    b1, b2 = two(rng.normal(size=3)), two(rng.normal(size=3))
    assert np.allclose(d1_energy(model, vv1(E1), b1).components, d1_energy(model, vv1(E1), b2).components)
    assert np.allclose(d2_energy(model, vv1(E1), b1).components, d2_energy(model, vv1(E2), b1).components)


@pytest.mark.parametrize("coupling", COUPLED)
@pytest.mark.parametrize("convention", ["elastic-at-zero-b", "magnetic-at-zero-eps"])
def test_decomposition_sums(coupling, convention, rng):
    model = MagnetoElasticEnergy(IsotropicElastic(1.0, 2.0), 0.9, coupling)
    psi_e, psi_m = decompose_energy(model, convention)
    E, b = vv1(rng.normal(size=(3, 3)) * 0.05), two(rng.normal(size=3))
    total = scalar(model.energy(E, b))
    assert scalar(psi_e(E, b)) + scalar(psi_m(E, b)) == pytest.approx(total, rel=1e-13)


def test_conventions_agree_only_when_separable(rng):
    E, b = vv1(rng.normal(size=(3, 3)) * 0.05), two(rng.normal(size=3))
    parts = {}
    for coupling in ("model_a", "model_b"):
        model = MagnetoElasticEnergy(IsotropicElastic(1.0, 2.0), 0.9, coupling)
        a = decompose_energy(model, "elastic-at-zero-b")[0](E, b)
        c = decompose_energy(model, "magnetic-at-zero-eps")[0](E, b)
        parts[coupling] = abs(scalar(a) - scalar(c))
    assert parts["model_a"] < 1e-14
    assert parts["model_b"] > 1e-6
    model = MagnetoElasticEnergy(IsotropicElastic(1.0, 2.0), 0.9, "model_b")
    psi_e = decompose_energy(model, "elastic-at-zero-b")[0]
    assert scalar(psi_e(E, b)) == scalar(psi_e(E, two(rng.normal(size=3))))
    with pytest.raises(ValueError):
        decompose_energy(model, "other")


def test_tangent_matrix_is_symmetric():
    C = tangent_matrix(MagnetoElasticEnergy(IsotropicElastic(1.3, 0.4), 1.0))
    assert np.allclose(C, C.T)
    assert np.linalg.matrix_rank(C) == 6
