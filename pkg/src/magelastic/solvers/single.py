"""Single-physics assembly and solves (elastostatics, magnetostatics)."""
import logging
from dataclasses import dataclass

import numpy as np

from ..algebra import PCovector, hodge_star
from ..constitutive import elastic_energy_density, magnetic_energy_density
from ..mesh import displacement_gradient, element_curl
from ..valued import CovectorValuedForm, VectorValuedForm
from . import assembly as asm
from .linalg import LinearSystem, cg_solve

log = logging.getLogger(__name__)


def body_nodes(spec):
    mask = spec.body_mask
    return np.unique(spec.mesh.tets[mask].ravel())


def constrained_nodes(spec, tags):
    """Vertices of boundary faces with ``tags`` (any tet)."""
    mesh = spec.mesh
    faces = mesh.boundary_face_indices(tags)
    return np.unique(mesh.faces[faces].ravel())


def assemble_elastic(spec, extra_load=None, clamp_all_boundary=False):
    """Elastic system over the body; nodes outside the body are fixed at zero.

    ``extra_load`` is added to the mechanical loads (magnetic forces).
    """
    mesh, G = spec.mesh, spec.metric
    lam, mu = spec.element_values("lam"), spec.element_values("mu")
    body = np.flatnonzero(spec.body_mask)
    K = asm.elastic_stiffness(mesh, lam, mu, G, body)
    rhs = asm.body_force_load(mesh, spec.body_force, body, G) + asm.traction_load(mesh, spec.traction, spec.body_mask, G)
    if extra_load is not None:
        rhs = rhs + extra_load

    nodes = body_nodes(spec)
    fixed_nodes = np.ones(mesh.n_vertices, dtype=bool)
    fixed_nodes[nodes] = False
    values = np.zeros((mesh.n_vertices, 3))
    in_body = ~fixed_nodes
    for tag, func in spec.displacement_bc.items():
        vs = constrained_nodes(spec, [tag])
        vs = vs[in_body[vs]]
        fixed_nodes[vs] = True
        values[vs] = func(mesh.vertices[vs])
    if clamp_all_boundary:
        vs = constrained_nodes(spec, None)
        fixed_nodes[vs] = True
        values[vs] = 0.0
    fixed = np.repeat(fixed_nodes, 3)
    kernel = None
    if not np.any(fixed_nodes[nodes]):
        kernel = asm.rigid_modes(mesh, nodes)
    return LinearSystem(K, rhs, fixed, values.ravel(), kernel)


def solve_linear_elastic(system, settings, x0=None):
    if system.kernel is not None:
        asm.check_rigid_compatibility(system.rhs, system.kernel, settings.compat_tol)
    x, info = cg_solve(system, tol=settings.tol, max_iter=settings.max_iter, x0=x0, return_info=True)
    if system.kernel is not None:
        q, _ = np.linalg.qr(system.kernel)
        x = x - q @ (q.T @ x)
    return x, info


def elastic_fields(spec, nu):
    mesh, G = spec.mesh, spec.metric
    eps = displacement_gradient(mesh, nu.reshape(-1, 3))
    body = spec.body_mask
    E = np.where(body[:, None, None], eps.components, 0.0)
    eps = VectorValuedForm(1, E)
    sigma = np.zeros((mesh.n_tets, 3, 3))
    energy = np.zeros(mesh.n_tets)
    for tag in spec.body_regions:
        sel = mesh.regions == tag
        mat = spec.materials[tag].elastic
        sigma[sel] = spec.materials[tag].elastic_stress(eps[sel]).components
        energy[sel] = elastic_energy_density(mat, G, eps[sel]).components[..., 0]
    return eps, CovectorValuedForm(2, sigma), PCovector(3, energy[:, None])


@dataclass
class MagneticSolution:
    a: np.ndarray
    b: PCovector
    h: PCovector
    energy_density: PCovector
    system: LinearSystem
    iterations: int
    residual: float


def assemble_magnetic(spec, metrics=None):
    """Curl-curl system on edges; ``metrics`` optionally gives one metric per tet."""
    mesh, G = spec.mesh, spec.metric
    r = spec.element_values("reluctivity")
    metrics = asm.element_metrics(G, mesh.n_tets) if metrics is None else metrics
    K = asm.magnetic_stiffness(mesh, r, metrics)
    rhs = asm.current_load(mesh, spec.current, G) + asm.surface_field_load(mesh, spec.surface_field, G)
    fixed, values = asm.potential_boundary_values(mesh, spec.potential_bc)
    return LinearSystem(K, rhs, fixed, values)


def solve_magnetic(spec, metrics=None, x0=None, seed=None):
    """Magnetostatic solve; no gauge is imposed, b = da is the unique output."""
    mesh = spec.mesh
    system = assemble_magnetic(spec, metrics)
    asm.check_gauge_compatibility(mesh, system.rhs, system.fixed, spec.settings.compat_tol)
    if x0 is None and seed is not None:
        x0 = np.random.default_rng(seed).normal(size=len(mesh.edges))
    a, info = cg_solve(system, tol=spec.settings.tol, max_iter=spec.settings.max_iter, x0=x0, return_info=True)
    b = element_curl(mesh, a)
    r = spec.element_values("reluctivity")
    Gt = asm.element_metrics(spec.metric, mesh.n_tets) if metrics is None else metrics
    h = hodge_star(Gt, b) * r
    dens = magnetic_energy_density(r, Gt, b)
    return MagneticSolution(a, b, h, dens, system, info.iterations, info.history[-1])
