"""Quadrature on simplices via collapsed (conical product) Gauss-Jacobi rules.

All rules return barycentric points and weights summing to one, so an
integral over a simplex is ``measure * sum(w * f(points))``.
"""
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


def _npoints(degree):
    return max(1, (int(degree) + 2) // 2)


@lru_cache(maxsize=None)
def line_rule(degree):
    t, w = roots_legendre(_npoints(degree))
    s = 0.5 * (1 + t)
    return np.stack([1 - s, s], axis=1), w / w.sum()


@lru_cache(maxsize=None)
def triangle_rule(degree):
    n = _npoints(degree)
    ta, wa = roots_jacobi(n, 1, 0)
    tb, wb = roots_legendre(n)
    a, b = 0.5 * (1 + ta), 0.5 * (1 + tb)
    A, B = np.meshgrid(a, b, indexing="ij")
    W = np.outer(wa, wb).ravel()
    x, y = A.ravel(), (B * (1 - A)).ravel()
    return np.stack([1 - x - y, x, y], axis=1), W / W.sum()


@lru_cache(maxsize=None)
def tet_rule(degree):
    """Rule on the tetrahedron exact for polynomials of total ``degree``."""
    n = _npoints(degree)
    ta, wa = roots_jacobi(n, 2, 0)
    tb, wb = roots_jacobi(n, 1, 0)
    tc, wc = roots_legendre(n)
    a, b, c = 0.5 * (1 + ta), 0.5 * (1 + tb), 0.5 * (1 + tc)
    A, B, C = np.meshgrid(a, b, c, indexing="ij")
    W = (wa[:, None, None] * wb[None, :, None] * wc[None, None, :]).ravel()
    x = A.ravel()
    y = (B * (1 - A)).ravel()
    z = (C * (1 - A) * (1 - B)).ravel()
    return np.stack([1 - x - y - z, x, y, z], axis=1), W / W.sum()
