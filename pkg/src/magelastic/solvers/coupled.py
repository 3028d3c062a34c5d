"""Single-physics and coupled magneto-elastic drivers.

Coupled problems are solved by a damped staggered (Picard) iteration: a
magnetic solve, then an elastic solve under the resulting magnetic loads,
repeated until the relative displacement increment drops below
``settings.outer_tol``. The damping factor is halved whenever the total
energy rises (logged, not fatal).
"""
import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..constitutive import deformed_metric, maxwell_stress, model_b_magnetic_energy, model_b_stress
from ..errors import NoConvergence
from ..mesh import displacement_gradient, integrate
from ..valued import CovectorValuedForm, VectorValuedForm
from . import assembly as asm
from .problem import SolveReport
from .single import assemble_elastic, elastic_fields, solve_linear_elastic, solve_magnetic

log = logging.getLogger(__name__)


def _potential(system, nu):
    return 0.5 * nu @ (system.matrix @ nu) - system.rhs @ nu


def _elastic_part(spec, report, extra_load=None, clamp_all_boundary=False, x0=None):
    system = assemble_elastic(spec, extra_load, clamp_all_boundary)
    nu, info = solve_linear_elastic(system, spec.settings, x0)
    eps, sigma, dens = elastic_fields(spec, nu)
    report.nu, report.eps, report.sigma = nu.reshape(-1, 3), eps, sigma
    report.energies["elastic"] = integrate(spec.mesh, dens, spec.body_regions, spec.metric.orientation_sign)
    report.iterations["elastic_cg"] = info.iterations
    report.systems["elastic"] = system
    return system, nu


def _magnetic_part(spec, report, metrics=None, x0=None):
    mag = solve_magnetic(spec, metrics, x0)
    report.a, report.b, report.h = mag.a, mag.b, mag.h
    report.energies["magnetic"] = integrate(spec.mesh, mag.energy_density, None, spec.metric.orientation_sign)
    report.iterations["magnetic_cg"] = mag.iterations
    report.systems["magnetic"] = mag.system
    return mag


def solve_elastic(spec):
    report = SolveReport("none", spec=spec)
    _elastic_part(spec, report)
    _finish(report)
    return report


def solve_magnetostatic(spec):
    report = SolveReport("none", spec=spec)
    _magnetic_part(spec, report)
    _finish(report)
    return report


def solve_decoupled(spec):
    """Independent elastic and magnetic solves (coupling ``none``)."""
    report = SolveReport("none", spec=spec)
    if spec.body_regions:
        _elastic_part(spec, report)
    _magnetic_part(spec, report)
    _finish(report)
    return report


def magnetic_stress_field(spec, b):
    r = spec.element_values("reluctivity")
    zero = VectorValuedForm(1, np.zeros((spec.mesh.n_tets, 3, 3)))
    return maxwell_stress(r, spec.metric, zero, b)


def magnetic_force_load(spec, S):
    """Load ``-int_M S . grad(dnu) + int_{dM} t(S_outside) . t(dnu)``.

    Body faces on the mesh boundary have no outside element; the inside
    trace is used there (no jump).
    """
    mesh, G = spec.mesh, spec.metric
    body = np.flatnonzero(spec.body_mask)
    g = asm.internal_force(mesh, S[body], body, G)
    faces, inside, outside = mesh.submesh_boundary(spec.body_regions)
    src = np.where(outside >= 0, outside, inside)
    return -g + asm.surface_stress_load(mesh, faces, inside, S[src], G)


def solve_coupled_model_a(spec):
    settings = spec.settings
    report = SolveReport("model_a", spec=spec)
    mag = _magnetic_part(spec, report)
    if spec.magnetic_forces:
        S = magnetic_stress_field(spec, mag.b)
    else:
        S = CovectorValuedForm(2, np.zeros((spec.mesh.n_tets, 3, 3)))
    report.magnetic_stress = S
    load = magnetic_force_load(spec, S)

    theta = settings.damping
    nu = np.zeros(3 * spec.mesh.n_vertices)
    last_energy = None
    for it in range(1, settings.max_outer + 1):
        system, candidate = _elastic_part(spec, report, load, x0=nu)
        new = nu + theta * (candidate - nu)
        energy = _potential(system, new)
        if last_energy is not None and energy > last_energy + 1e-14 * max(1.0, abs(last_energy)):
            msg = f"outer iteration {it}: total energy rose ({last_energy:.6e} -> {energy:.6e}); damping halved"
            log.warning(msg)
            report.warnings.append(msg)
            theta *= 0.5
        increment = np.linalg.norm(new - nu) / max(np.linalg.norm(new), 1e-300)
        if not np.any(new) and not np.any(nu):
            increment = 0.0
        nu, last_energy = new, energy
        report.history.append({"iteration": it, "increment": increment, "energy": energy, "damping": theta})
        if increment < settings.outer_tol:
            break
    else:
        raise NoConvergence(f"model A coupling did not converge in {settings.max_outer} outer iterations",
                            [h["increment"] for h in report.history])
    _set_nu(spec, report, nu)
    report.energies["total"] = last_energy + report.energies["magnetic"]
    report.energies["coupling"] = float(-load @ nu)
    report.iterations["outer"] = len(report.history)
    _finish(report)
    return report


def _set_nu(spec, report, nu):
    eps, sigma, dens = elastic_fields(spec, nu)
    report.nu, report.eps, report.sigma = nu.reshape(-1, 3), eps, sigma
    report.energies["elastic"] = integrate(spec.mesh, dens, spec.body_regions, spec.metric.orientation_sign)


class DisplacementExtension:
    """Discrete harmonic extension of body displacements into the surrounding region.

    Nodes on the mesh boundary carry zero; the remaining non-body nodes
    solve a (weighted) P1 Laplace problem with the body nodes as data.
    ``graded_laplace`` uses the weight ``1 + 4x`` and serves as an
    alternative extension operator.
    """

    def __init__(self, spec, kind="laplace"):
        mesh = spec.mesh
        body_nodes = np.zeros(mesh.n_vertices, dtype=bool)
        body_nodes[mesh.tets[spec.body_mask].ravel()] = True
        boundary = np.zeros(mesh.n_vertices, dtype=bool)
        boundary[mesh.faces[mesh.is_boundary_face].ravel()] = True
        self.air = np.flatnonzero(~body_nodes & ~boundary)
        self.body = np.flatnonzero(body_nodes)
        tets = np.flatnonzero(~spec.body_mask)
        g = mesh.barycentric_gradients[tets]
        weight = np.ones(len(tets)) if kind == "laplace" else 1.0 + 4.0 * mesh.tet_centroids[tets, 0]
        Ke = np.einsum("t,tal,tbl->tab", weight * mesh.volumes[tets], g, g)
        T = mesh.tets[tets]
        L = sp.csr_matrix((Ke.ravel(), (np.repeat(T, 4, axis=1).ravel(), np.tile(T, (1, 4)).ravel())),
                          shape=(mesh.n_vertices,) * 2)
        self.L_AM = L[self.air][:, self.body].tocsr()
        self._lu = splu(L[self.air][:, self.air].tocsc()) if len(self.air) else None

    def extend(self, nu_body):
        """Air-node displacements (n_air, 3) from body-node displacements (n_body, 3)."""
        if self._lu is None:
            return np.zeros((0, 3))
        return -self._lu.solve(np.asarray(self.L_AM @ nu_body))

    def pull_back(self, g_air):
        """Transpose action: body-node loads equivalent to air-node loads."""
        if self._lu is None:
            return np.zeros((len(self.body), 3))
        return -(self.L_AM.T @ self._lu.solve(np.asarray(g_air), trans="T"))

    def full(self, nu, n_vertices):
        out = nu.reshape(n_vertices, 3).copy()
        out[self.air] = self.extend(out[self.body])
        return out


def solve_coupled_model_b(spec):
    """Model B: coupling through the deformed-metric magnetic energy on the whole domain."""
    settings = spec.settings
    mesh, G = spec.mesh, spec.metric
    include_quadratic = spec.coupling == "model_b" and all(m.quadratic_metric_term for m in spec.materials.values())
    report = SolveReport(spec.coupling, spec=spec)
    ext = DisplacementExtension(spec, settings.extension)
    r = spec.element_values("reluctivity")
    all_tets = np.arange(mesh.n_tets)
    zero_eps = VectorValuedForm(1, np.zeros((mesh.n_tets, 3, 3)))

    theta = settings.damping
    nu = np.zeros((mesh.n_vertices, 3))
    a_prev, last_energy = None, None
    for it in range(1, settings.max_outer + 1):
        eps_all = zero_eps if settings.freeze_metric else displacement_gradient(mesh, nu)
        metrics = None if settings.freeze_metric else deformed_metric(G, eps_all, include_quadratic)
        mag = _magnetic_part(spec, report, metrics, a_prev)
        a_prev = mag.a
        sigma_mag = model_b_stress(r, G, eps_all, mag.b, include_quadratic)
        g = asm.internal_force(mesh, sigma_mag, all_tets, G).reshape(-1, 3)
        load = np.zeros_like(g)
        load[ext.body] = -(g[ext.body] + ext.pull_back(g[ext.air]))
        system, candidate = _elastic_part(spec, report, load.ravel(), clamp_all_boundary=True, x0=nu.ravel())
        candidate = ext.full(candidate, mesh.n_vertices)
        new = nu + theta * (candidate - nu)

        eps_new = zero_eps if settings.freeze_metric else displacement_gradient(mesh, new)
        psi_m = model_b_magnetic_energy(r, G, eps_new, mag.b, include_quadratic)
        e_mag = integrate(mesh, psi_m, None, G.orientation_sign)
        mech = 0.5 * new.ravel() @ (system.matrix @ new.ravel()) - (system.rhs - load.ravel()) @ new.ravel()
        energy = mech + e_mag
        if last_energy is not None and energy > last_energy + 1e-12 * max(1.0, abs(last_energy)):
            msg = f"outer iteration {it}: total energy rose ({last_energy:.6e} -> {energy:.6e}); damping halved"
            log.warning(msg)
            report.warnings.append(msg)
            theta *= 0.5
        increment = np.linalg.norm(new - nu) / max(np.linalg.norm(new), 1e-300)
        if not np.any(new) and not np.any(nu):
            increment = 0.0
        nu, last_energy = new, energy
        report.history.append({"iteration": it, "increment": increment, "energy": energy, "damping": theta})
        if increment < settings.outer_tol:
            break
    else:
        raise NoConvergence(f"model B coupling did not converge in {settings.max_outer} outer iterations",
                            [h["increment"] for h in report.history])

    # final fields at the converged displacement
    eps_all = zero_eps if settings.freeze_metric else displacement_gradient(mesh, nu)
    _set_nu(spec, report, nu.ravel())
    report.nu = nu
    report.magnetic_stress = model_b_stress(r, G, eps_all, report.b, include_quadratic)
    report.energies["magnetic"] = integrate(
        mesh, model_b_magnetic_energy(r, G, eps_all, report.b, include_quadratic), None, G.orientation_sign)
    report.energies["total"] = last_energy
    report.energies["coupling"] = report.energies["magnetic"] - integrate(
        mesh, model_b_magnetic_energy(r, G, zero_eps, report.b, include_quadratic), None, G.orientation_sign)
    report.iterations["outer"] = len(report.history)
    report.systems["extension"] = ext
    _finish(report)
    return report


def solve(spec):
    """Dispatch on the problem's coupling mode."""
    if spec.coupling == "none":
        return solve_decoupled(spec)
    if spec.coupling == "model_a":
        return solve_coupled_model_a(spec)
    return solve_coupled_model_b(spec)


def equilibrium_residual(report, nu=None, a=None):
    """Weak residuals of the elastic and magnetic equations at a state.

    Returns max and l2 norms over free degrees of freedom together with the
    load norms used for scaling. Loads that depend on the state (magnetic
    forces) are taken from the last assembled system.
    """
    out = {}
    el = report.systems.get("elastic")
    if el is not None:
        x = report.nu.ravel() if nu is None else np.asarray(nu, dtype=float).ravel()
        res = el.residual(x)
        out.update(elastic_max=float(np.max(np.abs(res), initial=0.0)), elastic_l2=float(np.linalg.norm(res)),
                   elastic_load=float(np.linalg.norm(el.reduced()[1])))
    mg = report.systems.get("magnetic")
    if mg is not None:
        x = report.a if a is None else np.asarray(a, dtype=float)
        res = mg.residual(x)
        out.update(magnetic_max=float(np.max(np.abs(res), initial=0.0)), magnetic_l2=float(np.linalg.norm(res)),
                   magnetic_load=float(np.linalg.norm(mg.reduced()[1])))
    return out


def _finish(report):
    report.residuals.update(equilibrium_residual(report))
