"""Sparse symmetric systems with eliminated essential conditions and CG."""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import NoConvergence


@dataclass
class LinearSystem:
    """``matrix @ x = rhs`` with the entries ``fixed`` prescribed as ``fixed_values``.

    The full (unreduced) matrix is kept; :meth:`reduced` eliminates the
    fixed degrees of freedom.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    fixed: np.ndarray = None
    fixed_values: np.ndarray = None
    kernel: np.ndarray = None  # optional basis of null vectors (columns), for compatibility checks

    def __post_init__(self):
        n = self.matrix.shape[0]
        self.matrix = sp.csr_matrix(self.matrix)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.fixed = np.zeros(n, dtype=bool) if self.fixed is None else np.asarray(self.fixed, dtype=bool)
        self.fixed_values = np.zeros(n) if self.fixed_values is None else np.asarray(self.fixed_values, dtype=float)

    @property
    def free(self):
        return ~self.fixed

    def reduced(self):
        f = self.free
        A = self.matrix[f][:, f]
        lift = self.matrix[f][:, self.fixed] @ self.fixed_values[self.fixed]
        return A.tocsr(), self.rhs[f] - lift

    def expand(self, x_free):
        x = self.fixed_values.copy()
        x[self.free] = x_free
        return x

    def symmetry_error(self):
        A = self.matrix
        scale = abs(A).max() if A.nnz else 1.0
        diff = A - A.T
        return (abs(diff).max() if diff.nnz else 0.0) / scale

    def residual(self, x):
        """Residual ``A x - b`` on the free entries."""
        return (self.matrix @ x - self.rhs)[self.free]


@dataclass
class CGInfo:
    iterations: int
    history: list = field(default_factory=list)


def cg_solve(system, rhs=None, tol=1e-10, max_iter=None, x0=None, return_info=False):
    """Jacobi-preconditioned conjugate gradients.

    ``system`` is a :class:`LinearSystem` (solved on its free entries and
    expanded back) or a symmetric positive (semi)definite matrix with
    ``rhs``. Stops at relative residual ``tol``; raises
    :class:`NoConvergence` after ``max_iter`` iterations.
    """
    if isinstance(system, LinearSystem):
        A, b = system.reduced()
        x0f = None if x0 is None else np.asarray(x0)[system.free]
        xf, info = _pcg(A, b, tol, max_iter, x0f)
        x = system.expand(xf)
    else:
        A = sp.csr_matrix(system) if not isinstance(system, np.ndarray) else system
        x, info = _pcg(A, np.asarray(rhs, dtype=float), tol, max_iter, x0)
    return (x, info) if return_info else x


def _pcg(A, b, tol, max_iter, x0):
    n = b.shape[0]
    max_iter = max(10 * n, 100) if max_iter is None else int(max_iter)
    diag = A.diagonal() if hasattr(A, "diagonal") else np.diag(A)
    inv_d = np.where(np.abs(diag) > 0, 1.0 / np.where(diag == 0, 1.0, diag), 1.0)
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0:
        return np.zeros(n), CGInfo(0, [0.0])
    r = b - A @ x
    history = [np.linalg.norm(r) / bnorm]
    if history[-1] <= tol:
        return x, CGInfo(0, history)
    z = inv_d * r
    p = z.copy()
    rz = r @ z
    for k in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise NoConvergence(f"CG breakdown at iteration {k} (p.Ap = {pAp:.3e})", history)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        history.append(np.linalg.norm(r) / bnorm)
        if history[-1] <= tol:
            # guard against drift of the recursive residual
            true = np.linalg.norm(b - A @ x) / bnorm
            if true <= tol:
                history[-1] = true
                return x, CGInfo(k, history)
            r = b - A @ x
        z = inv_d * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NoConvergence(f"CG did not reach relative residual {tol:g} in {max_iter} iterations "
                        f"(last {history[-1]:.3e})", history)
