import itertools
from math import factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from magelastic import valued as vf
from magelastic.algebra import SIZE, Metric, PCovector, permutation_sign, volume_form
from magelastic.errors import InvalidDegree, NotRepresentable
from magelastic.valued import (CovectorValuedForm, StressOperator, VectorValuedForm, dot_wedge, hodge_flat,
                               hodge_sharp, identity_form, isomorphism_matrix, operator_matrix, operator_to_stress,
                               skw, sym)

from conftest import spd

seeds = st.integers(0, 2 ** 32 - 1)


def brute_dot_wedge_value(left, right, vectors):
    """sum_i (left_i ^ right^i)(v...) by antisymmetrization of row evaluations."""
    p, q = left.degree, right.degree
    total = 0.0
    for perm in itertools.permutations(range(p + q)):
        vs = [vectors[i] for i in perm]
        a = left(*vs[:p]) if p else left.components[..., 0]
        b = right(*vs[p:]) if q else right.components[..., 0]
        total += permutation_sign(perm) * float(np.dot(a, b))
    return total / (factorial(p) * factorial(q))


def random_pair(rng, p, q, swap=False):
    left = CovectorValuedForm(p, rng.normal(size=(3, SIZE[p])))
    right = VectorValuedForm(q, rng.normal(size=(3, SIZE[q])))
    return (right, left) if swap else (left, right)


def test_dot_wedge_example():
    omega = CovectorValuedForm(1, [[1, 0, 0], [0, 0, 0], [0, 0, 0]])
    eta = VectorValuedForm(1, [[0, 1, 0], [0, 0, 0], [0, 0, 0]])
    assert np.array_equal(dot_wedge(omega, eta).components, [1.0, 0.0, 0.0])


def test_stress_operator_example():
    sigma = CovectorValuedForm(2, [[0, 0, 1], [0, 0, 0], [0, 0, 0]])
    e = VectorValuedForm(1, np.diag([1.0, 0.0, 0.0]))
    assert StressOperator(sigma)(e).components[0] == pytest.approx(1.0)
    assert dot_wedge(sigma, e).components[0] == pytest.approx(1.0)


@given(st.integers(0, 3), st.integers(0, 3), seeds)
def test_dot_wedge_matches_brute_force(p, q, seed):
    if p + q > 3:
        return
    rng = np.random.default_rng(seed)
    left, right = random_pair(rng, p, q)
    vecs = list(rng.normal(size=(p + q, 3)))
    got = dot_wedge(left, right)(*vecs) if p + q else dot_wedge(left, right).components[0]
    assert got == pytest.approx(brute_dot_wedge_value(left, right, vecs), abs=1e-11)


@given(st.integers(0, 3), st.integers(0, 3), seeds)
def test_dot_wedge_graded_anticommutative(p, q, seed):
    if p + q > 3:
        return
    rng = np.random.default_rng(seed)
    s, e = random_pair(rng, p, q)
    assert np.allclose(dot_wedge(s, e).components, (-1) ** (p * q) * dot_wedge(e, s).components, atol=1e-12)


@given(seeds)
def test_stress_operator_agrees_with_shuffle_product(seed):
    rng = np.random.default_rng(seed)
    sigma = CovectorValuedForm(2, rng.normal(size=(4, 3, 3)))
    e = VectorValuedForm(1, rng.normal(size=(4, 3, 3)))
    assert np.allclose(StressOperator(sigma)(e).components, dot_wedge(sigma, e).components, atol=1e-12)


def test_isomorphism_matrix_pattern():
    M = isomorphism_matrix()
    assert np.array_equal(M, np.diag(np.diag(M)))
    assert set(np.diag(M)) <= {-1.0, 1.0}
    # (omega dot-wedge)_i^l = eps^{jkl} omega_{i,j<k}
    expected = [permutation_sign((j, k, l)) for _ in range(3) for j, k in [(0, 1), (0, 2), (1, 2)]
                for l in range(3) if l not in (j, k)]
    assert np.diag(M).tolist() == expected
    assert abs(np.linalg.det(M)) == 1.0


def test_operator_matrix_of_all_ones_stress():
    sigma = CovectorValuedForm(2, np.ones((3, 3)))
    assert np.array_equal(operator_matrix(sigma), isomorphism_matrix())


@given(seeds)
def test_operator_round_trip(seed):
    rng = np.random.default_rng(seed)
    sigma = CovectorValuedForm(2, rng.normal(size=(3, 3)))
    back = operator_to_stress(operator_matrix(sigma))
    assert np.max(np.abs(back.components - sigma.components)) <= 1e-15
    assert np.array_equal(vf.functional_to_stress(vf.stress_functional(sigma)).components, sigma.components)


def test_off_diagonal_matrix_not_representable(rng):
    m = isomorphism_matrix() + 1e-6 * rng.normal(size=(9, 9))
    with pytest.raises(NotRepresentable):
        operator_to_stress(m)
    with pytest.raises(NotRepresentable):
        operator_to_stress(np.eye(3))


def test_sym_example():
    G = Metric(np.diag([4.0, 1.0, 1.0]))
    eps = VectorValuedForm(1, [[0, 1, 0], [0, 0, 0], [0, 0, 0]])
    s = sym(eps, G).components
    assert s[0, 1] == pytest.approx(0.5) and s[1, 0] == pytest.approx(2.0)
    assert np.count_nonzero(s) == 2


@given(seeds)
def test_sym_skw_split(seed):
    rng = np.random.default_rng(seed)
    G = Metric(spd(rng))
    eps = VectorValuedForm(1, rng.normal(size=(3, 3)))
    s, k = sym(eps, G), skw(eps, G)
    assert (s + k).allclose(eps)
    lowered_s, lowered_k = G.g @ s.components, G.g @ k.components
    assert np.allclose(lowered_s, lowered_s.T, atol=1e-12)
    assert np.allclose(lowered_k, -lowered_k.T, atol=1e-12)
    assert sym(s, G).allclose(s, atol=1e-12)


def test_trace_similarity_invariant(rng):
    E = rng.normal(size=(3, 3))
    P = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    a = vf.trace_vv1(VectorValuedForm(1, E))
    b = vf.trace_vv1(VectorValuedForm(1, P @ E @ np.linalg.inv(P)))
    assert a == pytest.approx(b, rel=1e-12)


def test_hodge_flat_identity_examples():
    G = Metric.euclidean()
    star_id = hodge_flat(G, identity_form())
    assert np.array_equal(star_id.components, [[0, 0, 1], [0, -1, 0], [1, 0, 0]])
    assert dot_wedge(identity_form(), star_id).components[0] == pytest.approx(3.0)
    G4 = Metric(np.diag([4.0, 1.0, 1.0]))
    eta = VectorValuedForm(1, [[1, 0, 0], [0, 0, 0], [0, 0, 0]])
    assert np.allclose(hodge_flat(G4, eta).components, [[0, 0, 2], [0, 0, 0], [0, 0, 0]])


@given(st.integers(0, 3), seeds, st.sampled_from([1, -1]))
def test_hodge_pairing_identity(p, seed, orientation):
    rng = np.random.default_rng(seed)
    G = Metric(spd(rng), orientation)
    eta = VectorValuedForm(p, rng.normal(size=(3, SIZE[p])))
    beta = VectorValuedForm(p, rng.normal(size=(3, SIZE[p])))
    lhs = dot_wedge(eta, hodge_flat(G, beta)).components[0]
    rhs = vf.inner_product(G, eta, beta) * volume_form(G).components[0]
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-12)
    assert vf.inner_product(G, eta, beta) == pytest.approx(vf.inner_product(G, beta, eta), rel=1e-12)


@given(st.integers(0, 3), seeds)
def test_hodge_sharp_inverts_flat(p, seed):
    rng = np.random.default_rng(seed)
    G = Metric(spd(rng))
    eta = VectorValuedForm(p, rng.normal(size=(3, SIZE[p])))
    assert hodge_sharp(G, hodge_flat(G, eta)).allclose(eta, rtol=1e-11, atol=1e-12)


def test_evaluation_of_valued_forms(rng):
    E = rng.normal(size=(3, 3))
    v = rng.normal(size=3)
    assert np.allclose(VectorValuedForm(1, E)(v), E @ v)
    w = VectorValuedForm.from_vector([1.0, 2.0, 3.0])
    assert np.array_equal(w.as_vector().components, [1.0, 2.0, 3.0])


@pytest.mark.parametrize("bad", [
    lambda: VectorValuedForm(1, np.zeros((3, 2))),
    lambda: dot_wedge(CovectorValuedForm(2, np.zeros((3, 3))), VectorValuedForm(2, np.zeros((3, 3)))),
    lambda: StressOperator(CovectorValuedForm(1, np.zeros((3, 3)))),
    lambda: sym(VectorValuedForm(2, np.zeros((3, 3))), Metric.euclidean()),
])
def test_invalid_degrees(bad):
    with pytest.raises(InvalidDegree):
        bad()


def test_dot_wedge_rejects_same_kind():
    e = VectorValuedForm(1, np.eye(3))
    with pytest.raises(TypeError):
        dot_wedge(e, e)


def test_rows_are_real_forms():
    sigma = CovectorValuedForm(2, np.arange(9.0).reshape(3, 3))
    assert isinstance(sigma.row(1), PCovector)
    assert np.array_equal(sigma.row(1).components, [3.0, 4.0, 5.0])
