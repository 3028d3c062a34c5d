"""Energy densities, stresses and magnetic field intensities.

All routines are pointwise and broadcast over leading batch axes, so the
same code evaluates one material point or every element of a mesh at once.
Material parameters may be scalars or arrays matching the batch.
"""
from dataclasses import dataclass, field

import numpy as np

from .algebra import Metric, PCovector, hodge_star, interior_product, wedge
from .errors import InvalidMaterial, InvalidMetric, StrainTooLarge
from .valued import (CovectorValuedForm, VectorValuedForm, compose_square, functional_to_stress, hodge_flat,
                     identity_form, inner_product, stress_functional, sym, trace_vv1)

COUPLINGS = ("none", "model_a", "model_b", "model_b_linearized")
MODEL_B_STRAIN_LIMIT = 0.3


@dataclass(frozen=True)
class IsotropicElastic:
    """Lame parameters ``lam`` and ``mu`` of the isotropic quadratic energy."""

    lam: float
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidMaterial(f"shear modulus must be positive, got {self.mu}")
        if not 3 * self.lam + 2 * self.mu > 0:
            raise InvalidMaterial(f"3*lambda + 2*mu must be positive, got lambda={self.lam}, mu={self.mu}")


def _positive(r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise InvalidMaterial(f"reluctivity must be positive, got {r}")
    return r


def _params(mat):
    return np.asarray(mat.lam, dtype=float), np.asarray(mat.mu, dtype=float)


def elastic_energy_density(mat, G, eps):
    lam, mu = _params(mat)
    tr = trace_vv1(eps)
    dens = 0.5 * (lam * tr ** 2 + mu * (trace_vv1(compose_square(eps)) + inner_product(G, eps, eps)))
    return PCovector(3, (dens * G.volume_factor)[..., None])


def elastic_stress(mat, G, eps):
    lam, mu = _params(mat)
    ident = VectorValuedForm(1, np.broadcast_to(identity_form().components, eps.components.shape))
    return hodge_flat(G, ident) * (lam * trace_vv1(eps)) + hodge_flat(G, sym(eps, G)) * (2 * mu)


def magnetic_energy_density(r, G, b):
    r = _positive(r)
    return wedge(hodge_star(G, b), b) * (0.5 * r)


def magnetic_field_intensity(r, G, b):
    return hodge_star(G, b) * _positive(r)


def maxwell_stress(r, G, eps, b):
    """Magnetic stress mapping; row k is the 2-form paired with the k-th vector component.

    ``eps`` is accepted for interface uniformity; the stress does not depend on it.
    """
    r = _positive(r)
    h = hodge_star(G, b)
    rows = []
    for k in range(3):
        ek = np.eye(3)[k]
        rows.append((wedge(h, interior_product(ek, b)) + wedge(interior_product(ek, h), b)).components)
    comps = np.stack(rows, axis=-2) * (0.5 * r)[..., None, None]
    return CovectorValuedForm(2, comps)


def deformed_metric(G, eps, include_quadratic=True):
    """Pull-back of G by ``x -> x + nu``: ``(I + E)^T G (I + E)`` or its linearisation."""
    E = eps.components
    g = G.g
    GE = np.einsum("...ik,...kj->...ij", g, E)
    ghat = g + GE + np.swapaxes(GE, -1, -2)
    if include_quadratic:
        ghat = ghat + np.einsum("...ki,...kl,...lj->...ij", E, g, E)
    try:
        return Metric(ghat, G.orientation_sign)
    except InvalidMetric as exc:
        raise StrainTooLarge(f"deformed metric lost positive definiteness: {exc}") from None


def _check_strain(eps):
    big = np.max(np.abs(eps.components), initial=0.0)
    if big > MODEL_B_STRAIN_LIMIT:
        raise StrainTooLarge(f"displacement gradient entry {big:.3g} exceeds {MODEL_B_STRAIN_LIMIT}")


def model_b_magnetic_energy(r, G, eps, b, include_quadratic=True):
    """``1/2 r *b ^ b`` with the star of the deformed metric."""
    _check_strain(eps)
    return magnetic_energy_density(r, deformed_metric(G, eps, include_quadratic), b)


def _density_vector(b):
    c = b.components
    return np.stack([c[..., 2], -c[..., 1], c[..., 0]], axis=-1)


def model_b_stress(r, G, eps, b, include_quadratic=True):
    """Analytic partial derivative in ``eps`` of the deformed-metric magnetic energy.

    Writing ``b`` through its density vector B, the energy coefficient is
    ``1/2 r s B^T Gh B / sqrt(det Gh)``; differentiating through
    ``Gh(E)`` gives the functional ``r G (I + E) P`` (``r G P`` when the
    quadratic metric term is dropped).
    """
    r = _positive(r)
    _check_strain(eps)
    Gh = deformed_metric(G, eps, include_quadratic)
    B = _density_vector(b)
    d = Gh.det
    q = np.einsum("...i,...ij,...j->...", B, Gh.g, B)
    root = np.sqrt(d)
    P = Gh.orientation_sign * (np.einsum("...i,...j->...ij", B, B) / root[..., None, None]
                               - 0.5 * (q / root)[..., None, None] * Gh.inverse)
    if include_quadratic:
        A = G.g @ (np.eye(3) + eps.components)
    else:
        A = np.broadcast_to(G.g, eps.components.shape)
    L = r[..., None, None] * np.einsum("...ik,...kl->...il", A, P)
    return functional_to_stress(L)


def _fd_stress(energy, eps, b, step=1e-6):
    """Central differences of ``energy(eps, b)`` in every strain component."""
    E = eps.components
    h = step * max(1.0, float(np.max(np.abs(E), initial=0.0)))
    L = np.zeros(E.shape)
    for i in range(3):
        for l in range(3):
            d = np.zeros(E.shape)
            d[..., i, l] = h
            plus = energy(VectorValuedForm(1, E + d), b).components[..., 0]
            minus = energy(VectorValuedForm(1, E - d), b).components[..., 0]
            L[..., i, l] = (plus - minus) / (2 * h)
    return functional_to_stress(L)


@dataclass(frozen=True)
class MagnetoElasticEnergy:
    """Pointwise magneto-elastic energy of one material.

    Parameters
    ----------
    elastic : IsotropicElastic or None
        None for non-structural regions (air); their elastic energy is zero.
    reluctivity : float
    coupling : one of ``COUPLINGS``
    G : Metric
        Base metric.
    quadratic_metric_term : bool
        Keep the term quadratic in the displacement gradient of the deformed
        metric (model B only; model_b_linearized always drops it).
    """

    elastic: IsotropicElastic | None
    reluctivity: float
    coupling: str = "model_a"
    G: Metric = field(default_factory=Metric.euclidean)
    quadratic_metric_term: bool = True

    def __post_init__(self):
        if self.coupling not in COUPLINGS:
            raise InvalidMaterial(f"unknown coupling {self.coupling!r}; expected one of {COUPLINGS}")
        _positive(self.reluctivity)

    @property
    def deformable_metric(self):
        return self.coupling in ("model_b", "model_b_linearized")

    @property
    def include_quadratic(self):
        return self.coupling == "model_b" and self.quadratic_metric_term

    def elastic_energy(self, eps):
        if self.elastic is None:
            return PCovector(3, np.zeros(eps.batch_shape + (1,)))
        return elastic_energy_density(self.elastic, self.G, eps)

    def magnetic_energy(self, eps, b):
        if self.deformable_metric:
            return model_b_magnetic_energy(self.reluctivity, self.G, eps, b, self.include_quadratic)
        return magnetic_energy_density(self.reluctivity, self.G, b)

    def energy(self, eps, b):
        return self.elastic_energy(eps) + self.magnetic_energy(eps, b)

    __call__ = energy

    def elastic_stress(self, eps):
        if self.elastic is None:
            return CovectorValuedForm(2, np.zeros(eps.components.shape))
        return elastic_stress(self.elastic, self.G, eps)


def d1_energy(model, eps, b, method="analytic"):
    """Partial derivative in the displacement gradient, as a covector-valued 2-form."""
    if method == "fd":
        return _fd_stress(model.energy, eps, b)
    sigma = model.elastic_stress(eps)
    if model.deformable_metric:
        sigma = sigma + model_b_stress(model.reluctivity, model.G, eps, b, model.include_quadratic)
    return sigma


def d2_energy(model, eps, b):
    """Partial derivative in the magnetic induction, as the 1-form h."""
    if model.deformable_metric:
        _check_strain(eps)
        return magnetic_field_intensity(model.reluctivity, deformed_metric(model.G, eps, model.include_quadratic), b)
    return magnetic_field_intensity(model.reluctivity, model.G, b)


def decompose_energy(model, convention="elastic-at-zero-b"):
    """Split the energy into elastic and magnetic parts summing to the whole.

    ``elastic-at-zero-b`` takes the elastic part as the energy at b = 0;
    ``magnetic-at-zero-eps`` takes the magnetic part as the energy at eps = 0.
    """
    def zero_b(b):
        return PCovector(2, np.zeros(b.components.shape))

    def zero_eps(eps):
        return VectorValuedForm(1, np.zeros(eps.components.shape))

    if convention == "elastic-at-zero-b":
        def psi_e(eps, b):
            return model.energy(eps, zero_b(b))

        def psi_m(eps, b):
            return model.energy(eps, b) - psi_e(eps, b)
    elif convention in ("magnetic-at-zero-eps", "magnetic-at-zero-ε"):
        def psi_m(eps, b):
            return model.energy(zero_eps(eps), b)

        def psi_e(eps, b):
            return model.energy(eps, b) - psi_m(eps, b)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return psi_e, psi_m


def tangent_matrix(model, G=None):
    """9x9 matrix of the elastic stress as a linear map on displacement gradients.

    ``C[(i, l), (j, m)]`` is the coefficient of ``dx^dy^dz`` in
    ``elastic_stress(e_j (x) dx^m) dot-wedge (e_i (x) dx^l)``.
    """
    basis = np.eye(9).reshape(9, 3, 3)
    sig = model.elastic_stress(VectorValuedForm(1, basis))
    return stress_functional(sig).reshape(9, 9).T


__all__ = [
    "IsotropicElastic", "MagnetoElasticEnergy", "COUPLINGS", "elastic_energy_density", "elastic_stress",
    "magnetic_energy_density", "magnetic_field_intensity", "maxwell_stress", "deformed_metric",
    "model_b_magnetic_energy", "model_b_stress", "d1_energy", "d2_energy", "decompose_energy",
    "tangent_matrix",
]
