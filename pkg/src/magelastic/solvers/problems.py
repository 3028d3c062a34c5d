"""Reference problems with known answers: uniform field, slab, manufactured elasticity."""
from dataclasses import dataclass

import numpy as np

from ..constitutive import IsotropicElastic, MagnetoElasticEnergy, tangent_matrix
from ..fields import SmoothField, covariant_exterior_derivative, polynomial_vector_field
from ..mesh import generate_box_mesh
from ..quadrature import tet_rule
from ..valued import ISOMORPHISM_SIGNS, TARGET_FORM_INDEX
from .problem import AffineField, ProblemSpec, SolverSettings

def uniform_b_potential(B=1.0):
    """``a = B x dy``, a potential of the uniform induction ``B dx^dy``."""
    return AffineField((0.0, 0.0, 0.0), ((0.0, 0.0, 0.0), (B, 0.0, 0.0), (0.0, 0.0, 0.0)))


def uniform_b_problem(n, r=1.0, B=1.0, jitter=0.0, seed=None, settings=None):
    """Unit box, a = B x dy prescribed on the whole boundary, no sources."""
    mesh = generate_box_mesh(divisions=(n, n, n), jitter=jitter, seed=seed)
    mats = {1: MagnetoElasticEnergy(None, r, "none")}
    pot = uniform_b_potential(B)
    return ProblemSpec(mesh, mats, potential_bc={t: pot for t in range(1, 7)},
                       settings=settings or SolverSettings())


SLAB_LOW, SLAB_HIGH = 0.375, 0.625
SLAB_SIDE_TAGS = (1, 2, 3, 4)


def slab_mesh(n):
    """Unit box with a full-width layer ``SLAB_LOW < z < SLAB_HIGH`` tagged 2, air tagged 1."""
    def regions(c):
        return np.where((c[:, 2] > SLAB_LOW) & (c[:, 2] < SLAB_HIGH), 2, 1)
    return generate_box_mesh(divisions=(n, n, n), region_rule=regions)


def slab_problem(n=16, coupling="model_a", r_air=1.0, r_slab=0.05, B=1.0, lam=100.0, mu=100.0,
                 magnetic_forces=True, settings=None):
    """High-contrast slab in air under a uniform induction normal to the slab.

    The slab's side faces (on the box boundary) are clamped. The uniform
    induction is imposed through ``a = B x dy`` on the whole box boundary.
    """
    mesh = slab_mesh(n)
    mats = {1: MagnetoElasticEnergy(None, r_air, coupling),
            2: MagnetoElasticEnergy(IsotropicElastic(lam, mu), r_slab, coupling)}
    pot = uniform_b_potential(B)
    zero = AffineField()
    return ProblemSpec(mesh, mats, displacement_bc={t: zero for t in SLAB_SIDE_TAGS},
                       potential_bc={t: pot for t in range(1, 7)},
                       settings=settings or SolverSettings(), magnetic_forces=magnetic_forces)


def slab_top_indicator(spec):
    """Nodal vector field e3 * psi, psi = 1 on the slab's top surface nodes, 0 elsewhere."""
    z = spec.mesh.vertices[:, 2]
    psi = np.isclose(z, SLAB_HIGH, atol=1e-9).astype(float)
    out = np.zeros((spec.mesh.n_vertices, 3))
    out[:, 2] = psi
    return out


def slab_analytic_force(r_air=1.0, r_slab=0.05, B=1.0, area=1.0):
    """Normal force on the slab's top face from the Maxwell-stress jump."""
    return 0.5 * (r_air - r_slab) * B ** 2 * area


# -- manufactured elasticity ------------------------------------------------
MANUFACTURED_DISPLACEMENT = (
    "(x**2*y + y*z**2 - x*z)/10",
    "(x*y*z + z**3 - x**2)/10",
    "(x**3 - y**2*z + x*y)/10",
)


@dataclass
class Manufactured:
    displacement: SmoothField
    body_force: SmoothField  # covector-valued 3-form, coefficient of dx^dy^dz per row
    material: MagnetoElasticEnergy


def manufactured_solution(lam=1.0, mu=1.0, exprs=MANUFACTURED_DISPLACEMENT):
    """Polynomial displacement and the body force that balances its stress."""
    material = MagnetoElasticEnergy(IsotropicElastic(lam, mu), 1.0, "none")
    nu = polynomial_vector_field(exprs)
    grad = covariant_exterior_derivative(nu)  # vector-valued 1-form
    C = tangent_matrix(material)  # C[(i,l),(j,m)]
    # sigma as a covector-valued 2-form: functional L[i,l] = C[(i,l),(j,m)] grad[j,m];
    # sigma_{i, jk} = sign * L[i, complement(jk)]
    P = np.zeros((9, 9))
    for i in range(3):
        for m, l in enumerate(TARGET_FORM_INDEX):
            P[3 * i + m, 3 * i + l] = ISOMORPHISM_SIGNS[m]
    sigma = grad.linear_map(P @ C, "covector", 2)
    force = covariant_exterior_derivative(sigma).map_exprs(lambda e: -e)
    return Manufactured(nu, force, material)


def manufactured_problem(n, lam=1.0, mu=1.0, settings=None):
    man = manufactured_solution(lam, mu)
    mesh = generate_box_mesh(divisions=(n, n, n))

    def f(points):
        return man.body_force(points)[..., 0]

    def bc(points):
        return man.displacement(points)[..., 0]

    spec = ProblemSpec(mesh, {1: man.material}, displacement_bc={t: bc for t in range(1, 7)},
                       body_force={1: f}, settings=settings or SolverSettings())
    return spec, man


def l2_displacement_error(mesh, nu_h, exact, order=6, chunk=20000):
    """L2 norm of (P1 interpolant of nu_h) - exact over the mesh."""
    lam, w = tet_rule(order)
    total = 0.0
    for start in range(0, mesh.n_tets, chunk):
        t = np.arange(start, min(mesh.n_tets, start + chunk))
        verts = mesh.vertices[mesh.tets[t]]
        pts = np.einsum("qk,tki->qti", lam, verts)
        uh = np.einsum("qk,tki->qti", lam, nu_h[mesh.tets[t]])
        ue = exact(pts)[..., 0]
        total += np.sum(w[:, None] * mesh.volumes[t][None, :] * np.sum((uh - ue) ** 2, axis=-1))
    return float(np.sqrt(total))


__all__ = ["uniform_b_problem", "uniform_b_potential", "slab_problem", "slab_mesh", "slab_top_indicator",
           "slab_analytic_force", "manufactured_solution", "manufactured_problem", "l2_displacement_error",
           "SLAB_LOW", "SLAB_HIGH"]
