"""Vector- and covector-valued forms at a point.

A valued p-form is stored as a ``(..., 3, C(3, p))`` block: row ``i`` holds
the real p-form multiplying the basis vector ``e_i`` (vector-valued) or the
basis covector ``dx^i`` (covector-valued). A vector-valued 1-form is thus a
3x3 matrix ``E[i, j]`` acting on vectors as ``v -> E v``.
"""
import numpy as np

from .algebra import (BASIS, COMPLEMENT, DIM, SIZE, WEDGE_TABLES, PCovector, PVector,
                      _check_degree, star_components)
from .errors import InvalidDegree, NotRepresentable


class _ValuedForm:
    __slots__ = ("degree", "components")

    def __init__(self, degree, components):
        degree = _check_degree(degree)
        arr = np.array(components, dtype=float)
        if arr.shape[-2:] != (DIM, SIZE[degree]):
            raise InvalidDegree(
                f"degree-{degree} valued form needs trailing shape (3, {SIZE[degree]}), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "components", arr)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def batch_shape(self):
        return self.components.shape[:-2]

    def row(self, i):
        """The real-valued form attached to the i-th basis element."""
        return PCovector(self.degree, self.components[..., i, :])

    def _same(self, other):
        if type(other) is not type(self) or other.degree != self.degree:
            raise InvalidDegree(f"cannot combine {self!r} with {other!r}")
        return other.components

    def __add__(self, other):
        return type(self)(self.degree, self.components + self._same(other))

    def __sub__(self, other):
        return type(self)(self.degree, self.components - self._same(other))

    def __neg__(self):
        return type(self)(self.degree, -self.components)

    def __mul__(self, scalar):
        scalar = np.asarray(scalar)
        return type(self)(self.degree, self.components * scalar[..., None, None])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / np.asarray(scalar))

    def __getitem__(self, index):
        if not self.batch_shape:
            raise IndexError("unbatched value")
        return type(self)(self.degree, self.components[index])

    def allclose(self, other, rtol=1e-12, atol=1e-14):
        return np.allclose(self.components, self._same(other), rtol=rtol, atol=atol)

    def __repr__(self):
        return f"{type(self).__name__}(degree={self.degree}, components={self.components.tolist()})"

    def _evaluate_rows(self, vectors):
        if len(vectors) != self.degree:
            raise InvalidDegree(f"a {self.degree}-form takes {self.degree} vectors")
        if self.degree == 0:
            return self.components[..., 0]
        return PCovector(self.degree, self.components)(
            *[np.asarray(getattr(v, "components", v), dtype=float)[..., None, :] for v in vectors])


class VectorValuedForm(_ValuedForm):
    """Vector-valued p-form; row i multiplies e_i."""

    __slots__ = ()

    def __call__(self, *vectors):
        """Value on ``degree`` vectors, returned as vector components (..., 3)."""
        return self._evaluate_rows(vectors)

    @classmethod
    def from_vector(cls, v):
        """Wrap a tangent vector as a vector-valued 0-form."""
        comps = v.components if isinstance(v, PVector) else np.asarray(v, dtype=float)
        return cls(0, comps[..., :, None])

    def as_vector(self):
        if self.degree != 0:
            raise InvalidDegree("only vector-valued 0-forms are vectors")
        return PVector(1, self.components[..., 0])


class CovectorValuedForm(_ValuedForm):
    """Covector-valued p-form; row i multiplies dx^i."""

    __slots__ = ()

    def __call__(self, *vectors):
        """Value on ``degree`` vectors, returned as covector components (..., 3)."""
        return self._evaluate_rows(vectors)


def identity_form():
    return VectorValuedForm(1, np.eye(DIM))


def dot_wedge(left, right):
    """Pairing product of a covector-valued and a vector-valued form.

    Either argument order is accepted; the result is the real (p+q)-form
    ``sum_i left_i ^ right^i`` with rows taken in the given order.
    """
    p, q = left.degree, right.degree
    if p + q > DIM:
        raise InvalidDegree(f"dot-wedge of degrees {p} and {q} exceeds dimension 3")
    kinds = (type(left), type(right))
    if kinds not in ((CovectorValuedForm, VectorValuedForm), (VectorValuedForm, CovectorValuedForm)):
        raise TypeError("dot_wedge pairs a covector-valued form with a vector-valued form")
    comps = np.einsum("...ia,...ib,abk->...k", left.components, right.components, WEDGE_TABLES[p, q])
    return PCovector(p + q, comps)


class StressOperator:
    """The linear map ``e -> sigma dot-wedge e`` of a covector-valued 2-form.

    Evaluated with the cyclic three-term formula on the coordinate frame,
    independently of the shuffle tables used by :func:`dot_wedge`.
    """

    def __init__(self, sigma):
        if not isinstance(sigma, CovectorValuedForm) or sigma.degree != 2:
            raise InvalidDegree("stress must be a covector-valued 2-form")
        self.sigma = sigma

    def __call__(self, e):
        if not isinstance(e, VectorValuedForm) or e.degree != 1:
            raise InvalidDegree("stress acts on vector-valued 1-forms")
        u, v, w = np.eye(DIM)
        s = self.sigma

        def pair(a, b):
            return np.sum(a * b, axis=-1)

        val = pair(s(u, v), e(w)) + pair(s(w, u), e(v)) + pair(s(v, w), e(u))
        return PCovector(3, val[..., None])


def stress_to_operator(sigma):
    return StressOperator(sigma)


# Component ordering of the 9-dimensional spaces. Stresses: (i, jk) with jk
# in the canonical 2-form order. Functionals on vector-valued 1-forms: the
# coefficient on e_i (x) dx^l, with l running through the complement of jk so
# the matrix comes out diagonal.
TARGET_FORM_INDEX = tuple(int(c) for c in COMPLEMENT[2][0])
TARGET_BASIS = tuple((i, l) for i in range(DIM) for l in TARGET_FORM_INDEX)
# sign of the permutation (j, k, l) for each canonical 2-form slot jk
ISOMORPHISM_SIGNS = np.array(COMPLEMENT[2][1], dtype=float)


def stress_functional(sigma):
    """``L[..., i, l]``: coefficient of Vol in ``sigma dot-wedge (e_i (x) dx^l)``."""
    L = np.zeros(sigma.batch_shape + (DIM, DIM))
    L[..., :, list(TARGET_FORM_INDEX)] = sigma.components * ISOMORPHISM_SIGNS
    return L


def functional_to_stress(L):
    """Covector-valued 2-form whose dot-wedge reproduces the functional ``L``.

    ``L[..., i, l]`` is the functional's value on ``e_i (x) dx^l`` (per unit
    volume coefficient).
    """
    L = np.asarray(L, dtype=float)
    return CovectorValuedForm(2, L[..., :, list(TARGET_FORM_INDEX)] * ISOMORPHISM_SIGNS)


def isomorphism_matrix():
    """Diagonal +-1 matrix of the stress isomorphism in the ordered bases."""
    return np.diag(np.tile(ISOMORPHISM_SIGNS, DIM))


def operator_matrix(sigma):
    """9x9 matrix of ``sigma``'s dot-wedge operator, built by evaluation.

    Column c corresponds to the c-th stress basis element weighted by
    sigma's component; row r to the functional basis ``TARGET_BASIS[r]``.
    """
    flat = sigma.components.reshape(sigma.batch_shape + (DIM * SIZE[2],))
    out = np.zeros(sigma.batch_shape + (9, 9))
    for c in range(9):
        single = np.zeros_like(flat)
        single[..., c] = flat[..., c]
        op = StressOperator(CovectorValuedForm(2, single.reshape(sigma.components.shape)))
        for r, (i, l) in enumerate(TARGET_BASIS):
            E = np.zeros((DIM, DIM))
            E[i, l] = 1.0
            out[..., r, c] = op(VectorValuedForm(1, E)).components[..., 0]
    return out


def operator_to_stress(m, atol=1e-12):
    """Inverse of :func:`operator_matrix`; off-diagonal content is rejected."""
    m = np.asarray(m, dtype=float)
    if m.shape[-2:] != (9, 9):
        raise NotRepresentable(f"expected a 9x9 matrix, got {m.shape}")
    diag = np.diagonal(m, axis1=-2, axis2=-1)
    off = m - diag[..., None] * np.eye(9)
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if np.max(np.abs(off), initial=0.0) > atol * scale:
        raise NotRepresentable("matrix has off-diagonal entries; not the operator of any stress")
    signs = np.tile(ISOMORPHISM_SIGNS, DIM)
    return CovectorValuedForm(2, (diag * signs).reshape(m.shape[:-2] + (DIM, SIZE[2])))


def _check_vv1(eps):
    if not isinstance(eps, VectorValuedForm) or eps.degree != 1:
        raise InvalidDegree("expected a vector-valued 1-form")
    return eps.components


def sym(eps, G):
    """G-symmetric part: ``(E + G^-1 E^T G) / 2``."""
    E = _check_vv1(eps)
    adj = np.einsum("...ik,...lk,...lj->...ij", G.inverse, E, G.g)
    return VectorValuedForm(1, 0.5 * (E + adj))


def skw(eps, G):
    E = _check_vv1(eps)
    adj = np.einsum("...ik,...lk,...lj->...ij", G.inverse, E, G.g)
    return VectorValuedForm(1, 0.5 * (E - adj))


def trace_vv1(eps):
    return np.trace(_check_vv1(eps), axis1=-2, axis2=-1)


def compose_square(eps):
    E = _check_vv1(eps)
    return VectorValuedForm(1, E @ E)


def inner_product(G, eta, beta):
    """Metric inner product of two vector-valued p-forms."""
    if eta.degree != beta.degree:
        raise InvalidDegree("inner product needs equal degrees")
    gram = G.covector_gram(eta.degree)
    return np.einsum("...ki,...LJ,...kL,...iJ->...", G.g, gram, eta.components, beta.components)


def hodge_flat(G, eta):
    """Vector-valued p-form to covector-valued (3-p)-form: lower the value, star the form."""
    if not isinstance(eta, VectorValuedForm):
        raise TypeError("hodge_flat takes a vector-valued form")
    starred = star_components(G, eta.components, eta.degree, row_axes=1)
    return CovectorValuedForm(DIM - eta.degree, np.einsum("...ik,...id->...kd", G.g, starred))


def hodge_sharp(G, omega):
    """Covector-valued p-form to vector-valued (3-p)-form: raise the value, star the form."""
    if not isinstance(omega, CovectorValuedForm):
        raise TypeError("hodge_sharp takes a covector-valued form")
    starred = star_components(G, omega.components, omega.degree, row_axes=1)
    return VectorValuedForm(DIM - omega.degree, np.einsum("...ik,...kd->...id", G.inverse, starred))


__all__ = [
    "BASIS", "VectorValuedForm", "CovectorValuedForm", "identity_form", "dot_wedge",
    "StressOperator", "stress_to_operator", "operator_matrix", "operator_to_stress",
    "isomorphism_matrix", "stress_functional", "functional_to_stress", "TARGET_BASIS",
    "sym", "skw", "trace_vv1", "compose_square", "inner_product", "hodge_flat", "hodge_sharp",
]
