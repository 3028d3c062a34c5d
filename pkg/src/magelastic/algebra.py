"""Exterior algebra of a 3-dimensional real vector space.

Degree-p elements store their ``C(3, p)`` independent components against
increasing multi-indices (0-based)::

    p = 1:  [0, 1, 2]
    p = 2:  [(0, 1), (0, 2), (1, 2)]
    p = 3:  [(0, 1, 2)]

so a 2-covector ``[a, b, c]`` means ``a dx^dy + b dx^dz + c dy^dz``. Every
value may carry leading batch axes (one value per mesh element, say); the
component axis is always the last one and all operations broadcast over the
batch axes.

Forms are evaluated with the determinant convention,
``(dx^dy)(e1, e2) = 1``.
"""
import itertools
from math import comb

import numpy as np

from .errors import InvalidDegree, InvalidMetric

DIM = 3
BASIS = {p: tuple(itertools.combinations(range(DIM), p)) for p in range(DIM + 1)}
SIZE = {p: comb(DIM, p) for p in range(DIM + 1)}


def permutation_sign(seq):
    """Sign of the permutation sorting ``seq``; 0 if an index repeats."""
    if len(set(seq)) != len(seq):
        return 0
    inversions = sum(1 for i, j in itertools.combinations(range(len(seq)), 2) if seq[i] > seq[j])
    return -1 if inversions % 2 else 1


def _wedge_tables():
    tables = {}
    for p in range(DIM + 1):
        for q in range(DIM + 1 - p):
            table = np.zeros((SIZE[p], SIZE[q], SIZE[p + q]))
            for a, I in enumerate(BASIS[p]):
                for b, J in enumerate(BASIS[q]):
                    sign = permutation_sign(I + J)
                    if sign:
                        table[a, b, BASIS[p + q].index(tuple(sorted(I + J)))] = sign
            tables[p, q] = table
    return tables


def _interior_tables():
    tables = {}
    for p in range(1, DIM + 1):
        table = np.zeros((DIM, SIZE[p], SIZE[p - 1]))
        for a, I in enumerate(BASIS[p]):
            for k, m in enumerate(I):
                rest = I[:k] + I[k + 1:]
                table[m, a, BASIS[p - 1].index(rest)] = (-1) ** k
        tables[p] = table
    return tables


def _complement_tables():
    tables = {}
    for p in range(DIM + 1):
        index = np.zeros(SIZE[p], dtype=int)
        sign = np.zeros(SIZE[p])
        for a, I in enumerate(BASIS[p]):
            comp = tuple(i for i in range(DIM) if i not in I)
            index[a] = BASIS[DIM - p].index(comp)
            sign[a] = permutation_sign(I + comp)
        tables[p] = (index, sign)
    return tables


# Shuffle tables: WEDGE_TABLES[p, q][i, j, k] is the sign with which
# basis_p[i] ^ basis_q[j] contributes to basis_{p+q}[k].
WEDGE_TABLES = _wedge_tables()
INTERIOR_TABLES = _interior_tables()
COMPLEMENT = _complement_tables()


def _components(components, size):
    arr = np.array(components)
    if arr.dtype.kind in "biu" or arr.dtype == object:
        arr = arr.astype(float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != size:
        raise InvalidDegree(f"expected {size} components on the last axis, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_degree(degree):
    if degree not in SIZE:
        raise InvalidDegree(f"degree must be in 0..3, got {degree}")
    return int(degree)


class _Graded:
    __slots__ = ("degree", "components")

    def __init__(self, degree, components):
        degree = _check_degree(degree)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "components", _components(components, SIZE[degree]))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def batch_shape(self):
        return self.components.shape[:-1]

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
        return type(self)(self.degree, self.components * scalar[..., None])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / np.asarray(scalar))

    def __getitem__(self, index):
        """Select along the batch axes."""
        if not self.batch_shape:
            raise IndexError("unbatched value")
        return type(self)(self.degree, self.components[index])

    def __repr__(self):
        return f"{type(self).__name__}(degree={self.degree}, components={self.components.tolist()})"

    def allclose(self, other, rtol=1e-12, atol=1e-14):
        return np.allclose(self.components, self._same(other), rtol=rtol, atol=atol)


class PCovector(_Graded):
    """A p-covector (value of a differential p-form at a point)."""

    __slots__ = ()

    def __call__(self, *vectors):
        """Evaluate on ``degree`` vectors (arrays of shape (..., 3) or PVectors)."""
        if len(vectors) != self.degree:
            raise InvalidDegree(f"a {self.degree}-covector takes {self.degree} vectors")
        if self.degree == 0:
            return self.components[..., 0]
        cols = [v.components if isinstance(v, PVector) else np.asarray(v, dtype=float) for v in vectors]
        mat = np.stack(np.broadcast_arrays(*cols), axis=-1)  # (..., 3, p)
        out = 0.0
        for a, I in enumerate(BASIS[self.degree]):
            out = out + self.components[..., a] * np.linalg.det(mat[..., list(I), :])
        return out


class PVector(_Graded):
    """A p-vector; degree defaults to 1 (tangent vectors)."""

    __slots__ = ()

    def __init__(self, degree, components=None):
        if components is None:
            degree, components = 1, degree
        super().__init__(degree, components)


def covector(*components):
    return PCovector(1, components)


def vector(*components):
    return PVector(1, components)


def basis_covector(degree, index):
    c = np.zeros(SIZE[_check_degree(degree)])
    c[index] = 1.0
    return PCovector(degree, c)


dx, dy, dz = (basis_covector(1, i) for i in range(3))
e1, e2, e3 = (PVector(1, row) for row in np.eye(3))


def compound(a, p):
    """Matrix of p x p minors of ``a`` (shape (..., 3, 3)) in the canonical basis."""
    a = np.asarray(a)
    batch = a.shape[:-2]
    if p == 0:
        return np.ones(batch + (1, 1), dtype=a.dtype)
    if p == 1:
        return a
    if p == 3:
        return np.linalg.det(a)[..., None, None]
    idx = np.array(BASIS[2])
    r0, r1 = idx[:, 0], idx[:, 1]
    return (a[..., r0[:, None], r0[None, :]] * a[..., r1[:, None], r1[None, :]]
            - a[..., r0[:, None], r1[None, :]] * a[..., r1[:, None], r0[None, :]])


class Metric:
    """Riemannian metric on the 3-dimensional space, possibly batched.

    ``orientation_sign`` fixes the global orientation; volume forms and
    Hodge duals carry this sign.
    """

    def __init__(self, g=None, orientation_sign=1):
        g = np.eye(DIM) if g is None else np.array(g, dtype=float)
        if g.shape[-2:] != (DIM, DIM):
            raise InvalidMetric(f"metric must have shape (..., 3, 3), got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise InvalidMetric("metric has non-finite entries")
        scale = np.max(np.abs(g)) if g.size else 1.0
        if not np.allclose(g, np.swapaxes(g, -1, -2), rtol=0, atol=1e-12 * scale):
            raise InvalidMetric("metric is not symmetric")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise InvalidMetric("metric is not positive definite") from None
        if orientation_sign not in (1, -1):
            raise InvalidMetric("orientation_sign must be +1 or -1")
        g.setflags(write=False)
        self.g = g
        self.orientation_sign = int(orientation_sign)
        self.inverse = np.linalg.inv(g)
        self.det = np.linalg.det(g)

    @classmethod
    def euclidean(cls):
        return cls(np.eye(DIM))

    @property
    def batch_shape(self):
        return self.g.shape[:-2]

    @property
    def volume_factor(self):
        """Coefficient of dx^dy^dz in the volume form."""
        return self.orientation_sign * np.sqrt(self.det)

    def __getitem__(self, index):
        return Metric(self.g[index], self.orientation_sign)

    def covector_gram(self, p):
        """Gram matrix of the induced inner product on p-covectors."""
        return compound(self.inverse, p)

    def __repr__(self):
        return f"Metric(g={self.g.tolist()}, orientation_sign={self.orientation_sign})"


def wedge(a, b):
    """Exterior product of two p-covectors."""
    p, q = a.degree, b.degree
    if p + q > DIM:
        raise InvalidDegree(f"wedge of degrees {p} and {q} exceeds dimension 3")
    comps = np.einsum("...i,...j,ijk->...k", a.components, b.components, WEDGE_TABLES[p, q])
    return PCovector(p + q, comps)


def _vector_components(v):
    if isinstance(v, PVector):
        if v.degree != 1:
            raise InvalidDegree("expected a 1-vector")
        return v.components
    return np.asarray(v, dtype=float)


def interior_product(v, a):
    """Contraction ``i_v a`` of a p-covector with a vector in the first slot."""
    if a.degree == 0:
        raise InvalidDegree("interior product of a 0-covector is undefined")
    comps = np.einsum("...m,...i,mik->...k", _vector_components(v), a.components,
                      INTERIOR_TABLES[a.degree])
    return PCovector(a.degree - 1, comps)


def inner_product(G, a, b):
    if a.degree != b.degree:
        raise InvalidDegree(f"inner product of degrees {a.degree} and {b.degree}")
    return np.einsum("...i,...ij,...j->...", a.components, G.covector_gram(a.degree), b.components)


def star_components(G, components, p, row_axes=0):
    """Hodge dual on raw component arrays.

    ``row_axes`` extra axes sitting between the metric's batch axes and the
    component axis are broadcast over (rows of a valued form).
    """
    gram = G.covector_gram(p)
    factor = np.asarray(G.volume_factor)
    for _ in range(row_axes):
        gram = gram[..., None, :, :]
        factor = factor[..., None]
    y = np.einsum("...ij,...j->...i", gram, components)
    index, sign = COMPLEMENT[p]
    scaled = sign * factor[..., None] * y
    out = np.zeros(scaled.shape[:-1] + (SIZE[DIM - p],), dtype=scaled.dtype)
    out[..., index] = scaled
    return out


def hodge_star(G, a):
    """Hodge dual, defined by ``c ^ *a = <c, a> Vol`` for all c of a's degree."""
    return PCovector(DIM - a.degree, star_components(G, a.components, a.degree))


def volume_form(G):
    return PCovector(3, np.asarray(G.volume_factor)[..., None])


def metric_flat(G, v):
    return PCovector(1, np.einsum("...ij,...j->...i", G.g, _vector_components(v)))


def metric_sharp(G, a):
    if a.degree != 1:
        raise InvalidDegree("metric_sharp takes a 1-covector")
    return PVector(1, np.einsum("...ij,...j->...i", G.inverse, a.components))


def exterior_derivative_at(jacobian, degree):
    """Components of ``d omega`` from the Jacobian of a p-form's components.

    ``jacobian[..., I, m]`` is the derivative of component I along x_m.
    """
    if degree >= DIM:
        raise InvalidDegree("d of a 3-form vanishes identically in three dimensions")
    return np.einsum("...im,mik->...k", jacobian, WEDGE_TABLES[1, degree])
