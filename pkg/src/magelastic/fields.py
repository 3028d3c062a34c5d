"""Smooth (symbolic) fields of real and valued forms, used for verification.

A :class:`SmoothField` holds sympy expressions in the Cartesian coordinates
``x, y, z`` and evaluates them (and their analytic derivatives) on numpy
point arrays. The connection is the flat Euclidean one, so covariant
exterior derivatives act row by row.
"""
import numpy as np
import sympy

from .algebra import SIZE, WEDGE_TABLES, PCovector
from .errors import InvalidDegree
from .valued import CovectorValuedForm, VectorValuedForm

X = sympy.symbols("x y z", real=True)
_KINDS = ("real", "vector", "covector")


class SmoothField:
    """Smooth real, vector-valued or covector-valued p-form.

    Parameters
    ----------
    kind : {"real", "vector", "covector"}
    degree : int
    exprs : nested sequence
        Shape (C(3, p),) for real forms and (3, C(3, p)) for valued forms,
        entries are sympy expressions (or numbers) in ``X``.
    """

    def __init__(self, kind, degree, exprs):
        if kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        if degree not in SIZE:
            raise InvalidDegree(f"degree must be 0..3, got {degree}")
        rows = 1 if kind == "real" else 3
        mat = sympy.Matrix(exprs) if kind != "real" else sympy.Matrix([list(np.ravel(np.array(exprs, dtype=object)))])
        if mat.shape != (rows, SIZE[degree]):
            raise InvalidDegree(f"expected {rows}x{SIZE[degree]} expressions, got {mat.shape}")
        self.kind, self.degree, self.exprs = kind, degree, mat
        self._funcs = None

    def _compiled(self):
        if self._funcs is None:
            self._funcs = [[sympy.lambdify(X, e, "numpy") for e in row] for row in self.exprs.tolist()]
        return self._funcs

    def components(self, points):
        """Component array at ``points`` (..., 3): (..., C) or (..., 3, C)."""
        pts = np.asarray(points, dtype=float)
        shape = pts.shape[:-1]
        args = (pts[..., 0], pts[..., 1], pts[..., 2])
        out = np.array([[np.broadcast_to(np.asarray(f(*args), dtype=float), shape) for f in row]
                        for row in self._compiled()])
        out = np.moveaxis(out, (0, 1), (-2, -1))
        return out[..., 0, :] if self.kind == "real" else out

    __call__ = components

    def value(self, point):
        """Pointwise value as a library form object."""
        comps = self.components(point)
        if self.kind == "real":
            return PCovector(self.degree, comps)
        cls = VectorValuedForm if self.kind == "vector" else CovectorValuedForm
        return cls(self.degree, comps)

    def jacobian(self, points):
        """Analytic derivatives, trailing axis = coordinate direction."""
        J = SmoothField._from_matrix(self.kind, self.degree, self.exprs)
        cols = [J.map_exprs(lambda e, m=m: sympy.diff(e, X[m])).components(points) for m in range(3)]
        return np.stack(cols, axis=-1)

    @classmethod
    def _from_matrix(cls, kind, degree, mat):
        return cls(kind, degree, mat.tolist() if kind != "real" else list(mat))

    def map_exprs(self, fn):
        return SmoothField._from_matrix(self.kind, self.degree, self.exprs.applyfunc(fn))

    def linear_map(self, matrix, kind, degree):
        """Apply a constant matrix to the flattened components."""
        flat = sympy.Matrix(list(self.exprs))
        new = sympy.Matrix(np.asarray(matrix, dtype=float).tolist()) * flat
        rows = 1 if kind == "real" else 3
        mat = new.reshape(rows, SIZE[degree])
        return SmoothField._from_matrix(kind, degree, mat)

    def __add__(self, other):
        if (other.kind, other.degree) != (self.kind, self.degree):
            raise InvalidDegree("cannot add fields of different type")
        return SmoothField._from_matrix(self.kind, self.degree, self.exprs + other.exprs)

    def __sub__(self, other):
        return self + other.map_exprs(lambda e: -e)

    def __repr__(self):
        return f"SmoothField({self.kind}, degree={self.degree}, {self.exprs.tolist()})"


def _d_rows(mat, degree):
    if degree >= 3:
        raise InvalidDegree("d of a 3-form vanishes identically in three dimensions")
    table = WEDGE_TABLES[1, degree]
    rows, cols = mat.shape
    out = sympy.zeros(rows, SIZE[degree + 1])
    for r in range(rows):
        for m in range(3):
            for i in range(cols):
                for k in range(SIZE[degree + 1]):
                    if table[m, i, k]:
                        out[r, k] += int(table[m, i, k]) * sympy.diff(mat[r, i], X[m])
    return out.applyfunc(sympy.expand)


def exterior_derivative_field(field):
    """Exterior derivative of a smooth real form."""
    if field.kind != "real":
        raise TypeError("use covariant_exterior_derivative for valued forms")
    return SmoothField._from_matrix("real", field.degree + 1, _d_rows(field.exprs, field.degree))


def covariant_exterior_derivative(field, point=None):
    """Covariant exterior derivative for the flat Cartesian connection.

    Returns a :class:`SmoothField`, or its value at ``point`` when given.
    """
    if field.kind == "real":
        raise TypeError("covariant_exterior_derivative acts on valued forms")
    out = SmoothField._from_matrix(field.kind, field.degree + 1, _d_rows(field.exprs, field.degree))
    return out if point is None else out.value(point)


def dot_wedge_field(left, right):
    """Symbolic pairing product of a covector-valued and a vector-valued field."""
    if {left.kind, right.kind} != {"vector", "covector"}:
        raise TypeError("dot_wedge_field pairs covector- and vector-valued fields")
    p, q = left.degree, right.degree
    if p + q > 3:
        raise InvalidDegree("degree overflow")
    table = WEDGE_TABLES[p, q]
    out = [sympy.Integer(0)] * SIZE[p + q]
    for r in range(3):
        for a in range(SIZE[p]):
            for b in range(SIZE[q]):
                for k in range(SIZE[p + q]):
                    if table[a, b, k]:
                        out[k] += int(table[a, b, k]) * left.exprs[r, a] * right.exprs[r, b]
    return SmoothField("real", p + q, [sympy.expand(e) for e in out])


def polynomial_vector_field(coeffs_or_exprs):
    """Vector-valued 0-form from three expressions (strings or sympy)."""
    exprs = [sympy.sympify(e, locals=dict(zip("xyz", X))) for e in coeffs_or_exprs]
    return SmoothField("vector", 0, [[e] for e in exprs])


def random_polynomial_field(kind, degree, rng, max_degree=2, terms=4):
    """Random polynomial field with small integer-ish coefficients."""
    rows = 1 if kind == "real" else 3
    monos = [X[0] ** a * X[1] ** b * X[2] ** c
             for a in range(max_degree + 1) for b in range(max_degree + 1) for c in range(max_degree + 1)
             if a + b + c <= max_degree]

    def entry():
        idx = rng.choice(len(monos), size=terms, replace=False)
        coef = rng.integers(-5, 6, size=terms)
        return sum(int(c) * monos[i] for c, i in zip(coef, idx))

    exprs = [[entry() for _ in range(SIZE[degree])] for _ in range(rows)]
    return SmoothField(kind, degree, exprs if kind != "real" else exprs[0])
