"""Element loops for the elastic and magnetic weak forms.

Elastic unknowns are nodal vectors, flattened as ``3 * vertex + component``.
Magnetic unknowns are edge values of the covector potential. Volume and
surface integrals carry the orientation sign of the base metric.
"""
import numpy as np
import scipy.sparse as sp

from ..algebra import BASIS, WEDGE_TABLES, Metric
from ..constitutive import IsotropicElastic, MagnetoElasticEnergy, tangent_matrix
from ..errors import IllPosedLoad, NonSolenoidalCurrent
from ..mesh import interpolate_form, trace_boundary, whitney_edge_forms, whitney_face_coefficients
from ..quadrature import tet_rule
from ..valued import stress_functional

CHUNK = 20000


def _chunks(n, size=CHUNK):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


def elastic_tangents(G):
    """Tangent matrices per unit lambda and per unit mu, shape (3, 3, 3, 3)."""
    c_mu = tangent_matrix(MagnetoElasticEnergy(IsotropicElastic(0.0, 1.0), 1.0, "none", G))
    c_both = tangent_matrix(MagnetoElasticEnergy(IsotropicElastic(1.0, 1.0), 1.0, "none", G))
    return (c_both - c_mu).reshape(3, 3, 3, 3), c_mu.reshape(3, 3, 3, 3)


def elastic_stiffness(mesh, lam, mu, G, tets=None):
    """Global stiffness ``K[(a,i),(b,j)] = int sigma(e_j (x) d phi_b) . (e_i (x) d phi_a)``."""
    tets = np.flatnonzero(np.ones(mesh.n_tets, bool)) if tets is None else np.asarray(tets)
    c_lam, c_mu = elastic_tangents(G)
    s = G.orientation_sign
    n = 3 * mesh.n_vertices
    K = sp.csr_matrix((n, n))
    for sl in _chunks(len(tets)):
        t = tets[sl]
        g = mesh.barycentric_gradients[t]
        w = s * mesh.volumes[t]
        Ct = lam[t, None, None, None, None] * c_lam + mu[t, None, None, None, None] * c_mu
        Ke = np.einsum("t,tiljm,tal,tbm->taibj", w, Ct, g, g, optimize=True).reshape(len(t), 12, 12)
        dof = (3 * mesh.tets[t][:, :, None] + np.arange(3)).reshape(len(t), 12)
        rows = np.repeat(dof, 12, axis=1).ravel()
        cols = np.tile(dof, (1, 12)).ravel()
        K = K + sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(n, n))
    K.sum_duplicates()
    return K


def internal_force(mesh, sigma, tets, G):
    """Vector ``int sigma . grad(phi_a e_i)`` over ``tets`` for per-tet stresses ``sigma`` (batched over tets)."""
    tets = np.asarray(tets)
    L = stress_functional(sigma)  # (nt_sel, 3, 3)
    g = mesh.barycentric_gradients[tets]
    w = G.orientation_sign * mesh.volumes[tets]
    loc = np.einsum("t,til,tal->tai", w, L, g)
    out = np.zeros(3 * mesh.n_vertices)
    np.add.at(out, (3 * mesh.tets[tets][:, :, None] + np.arange(3)).ravel(), loc.ravel())
    return out


def body_force_load(mesh, body_force, tets, G, order=4):
    out = np.zeros(3 * mesh.n_vertices)
    s = G.orientation_sign
    tets = np.asarray(tets)
    for tag, f in body_force.items():
        sel = tets[mesh.regions[tets] == tag]
        if not len(sel):
            continue
        if callable(f):
            lam, w = tet_rule(order)
            for sl in _chunks(len(sel)):
                t = sel[sl]
                pts = np.einsum("qk,tki->qti", lam, mesh.vertices[mesh.tets[t]])
                fv = np.asarray(f(pts))  # (q, t, 3)
                loc = s * mesh.volumes[t][:, None, None] * np.einsum("q,qa,qti->tai", w, lam, fv)
                np.add.at(out, (3 * mesh.tets[t][:, :, None] + np.arange(3)).ravel(), loc.ravel())
        else:
            fv = np.asarray(f, dtype=float)
            loc = s * mesh.volumes[sel][:, None, None] * 0.25 * np.broadcast_to(fv, (len(sel), 4, 3))
            np.add.at(out, (3 * mesh.tets[sel][:, :, None] + np.arange(3)).ravel(), loc.ravel())
    return out


def traction_load(mesh, traction, body_mask, G):
    """Surface loads: force per area on boundary faces of the body with the given tags."""
    out = np.zeros(3 * mesh.n_vertices)
    for tag, t in traction.items():
        faces = mesh.boundary_face_indices([tag])
        faces = faces[body_mask[mesh.face_tets[faces, 0]]]
        if not len(faces):
            continue
        area = mesh.face_areas(faces)
        loc = G.orientation_sign * area[:, None, None] * np.broadcast_to(np.asarray(t, float), (len(faces), 3, 3)) / 3
        np.add.at(out, (3 * mesh.faces[faces][:, :, None] + np.arange(3)).ravel(), loc.ravel())
    return out


def surface_stress_load(mesh, faces, inside, sigma_faces, G):
    """``int_faces t(sigma) . t(dnu)`` with faces oriented out of the ``inside`` tets."""
    if not len(faces):
        return np.zeros(3 * mesh.n_vertices)
    ts = trace_boundary(mesh, sigma_faces, faces)  # rows (nf, 3, 1): value on (t1, t2)
    orient = mesh.face_orientation(faces, inside) * G.orientation_sign
    per_face = 0.5 * orient[:, None] * ts.components[..., 0]  # integral of each row 2-form
    loc = np.broadcast_to(per_face[:, None, :] / 3.0, (len(faces), 3, 3))
    out = np.zeros(3 * mesh.n_vertices)
    np.add.at(out, (3 * mesh.faces[faces][:, :, None] + np.arange(3)).ravel(), loc.ravel())
    return out


def rigid_modes(mesh, nodes):
    """Columns: three translations and three infinitesimal rotations on ``nodes``."""
    x = mesh.vertices[nodes]
    x = x - x.mean(axis=0)
    R = np.zeros((3 * mesh.n_vertices, 6))
    for i in range(3):
        R[3 * nodes + i, i] = 1.0
    for k, axis in enumerate(np.eye(3)):
        rot = np.cross(axis, x)
        for i in range(3):
            R[3 * nodes + i, 3 + k] = rot[:, i]
    return R


def check_rigid_compatibility(load, modes, tol):
    """Raise IllPosedLoad unless ``load`` does no work on any rigid mode."""
    q, _ = np.linalg.qr(modes)
    lnorm = np.linalg.norm(load)
    if lnorm == 0:
        return 0.0
    ratio = np.linalg.norm(q.T @ load) / lnorm
    if ratio > tol:
        raise IllPosedLoad(f"load does work on rigid displacements (relative projection {ratio:.3e} > {tol:g}) "
                           "and the body has no displacement constraint")
    return ratio


# -- magnetic ---------------------------------------------------------
_BARY_MASS = (np.ones((4, 4)) + np.eye(4)) / 20.0


def face_mass(mesh, weights, metrics):
    """Per-face mass on 2-forms ``M[f,g] = int r <w_f, w_g> Vol``.

    ``weights`` are per-tet reluctivities, ``metrics`` a batched Metric
    with one entry per tet (or a single Metric).
    """
    nf = len(mesh.faces)
    s = metrics.orientation_sign
    M = sp.csr_matrix((nf, nf))
    batched = metrics.batch_shape != ()
    for sl in _chunks(mesh.n_tets):
        t = np.arange(mesh.n_tets)[sl]
        coef = whitney_face_coefficients(mesh, t)  # (n, 4, 4, 3)
        if batched:
            H = (metrics.volume_factor[sl, None, None] * metrics.covector_gram(2)[sl])
        else:
            H = np.broadcast_to(metrics.volume_factor * metrics.covector_gram(2), (len(t), 3, 3))
        w = s * weights[t] * mesh.volumes[t]
        Me = np.einsum("t,tfmk,tkl,tgnl,mn->tfg", w, coef, H, coef, _BARY_MASS, optimize=True)
        dof = mesh.tet_faces[t]
        rows = np.repeat(dof, 4, axis=1).ravel()
        cols = np.tile(dof, (1, 4)).ravel()
        M = M + sp.csr_matrix((Me.ravel(), (rows, cols)), shape=(nf, nf))
    M.sum_duplicates()
    return M


def magnetic_stiffness(mesh, weights, metrics):
    M = face_mass(mesh, weights, metrics)
    D1 = mesh.D1.astype(float)
    return (D1.T @ M @ D1).tocsr()


def current_load(mesh, current, G):
    """``int j ^ w_e`` with the one-point (centroid) rule."""
    out = np.zeros(len(mesh.edges))
    if not current:
        return out
    centroid = np.full(4, 0.25)
    s = G.orientation_sign
    for tag, j in current.items():
        sel = np.flatnonzero(mesh.regions == tag)
        if not len(sel):
            continue
        w = whitney_edge_forms(mesh, centroid, sel)  # (n, 6, 3)
        jv = np.asarray(j(mesh.tet_centroids[sel]) if callable(j) else np.broadcast_to(np.asarray(j, float), (len(sel), 3)))
        val = np.einsum("ta,teb,abk->te", jv, w, WEDGE_TABLES[2, 1])
        np.add.at(out, mesh.tet_edges[sel].ravel(), (s * mesh.volumes[sel][:, None] * val).ravel())
    return out


def surface_field_load(mesh, surface_field, G):
    """``int_{boundary} h_s ^ t(w_e)`` for constant 1-forms ``h_s`` per boundary tag."""
    out = np.zeros(len(mesh.edges))
    for tag, h in surface_field.items():
        faces = mesh.boundary_face_indices([tag])
        if not len(faces):
            continue
        tets = mesh.face_tets[faces, 0]
        local = np.argmax(mesh.tet_faces[tets] == faces[:, None], axis=1)
        bary = np.full((len(faces), 4), 1.0 / 3.0)
        bary[np.arange(len(faces)), local] = 0.0
        w = np.stack([whitney_edge_forms(mesh, bary[k], [tets[k]])[0] for k in range(len(faces))])
        hw = np.einsum("a,teb,abk->tek", np.asarray(h, float), w, WEDGE_TABLES[1, 1])
        _, t1, t2 = mesh.face_frames(faces)
        minors = np.stack([t1[:, a] * t2[:, b] - t1[:, b] * t2[:, a] for a, b in BASIS[2]], axis=-1)
        orient = mesh.face_orientation(faces, tets) * G.orientation_sign
        val = 0.5 * orient[:, None] * np.einsum("tek,tk->te", hw, minors)
        np.add.at(out, mesh.tet_edges[tets].ravel(), val.ravel())
    return out


def potential_boundary_values(mesh, potential_bc):
    """Fixed-edge mask and prescribed edge values on S_m."""
    fixed = np.zeros(len(mesh.edges), dtype=bool)
    values = np.zeros(len(mesh.edges))
    for tag, func in potential_bc.items():
        faces = mesh.boundary_face_indices([tag])
        if not len(faces):
            continue
        F = mesh.faces[faces]
        edges = np.unique(mesh.find_edges(np.concatenate([F[:, [0, 1]], F[:, [0, 2]], F[:, [1, 2]]])))
        vals = interpolate_form(mesh, 1, func).values
        fixed[edges] = True
        values[edges] = vals[edges]
    return fixed, values


def check_gauge_compatibility(mesh, load, fixed_edges, tol):
    """Raise NonSolenoidalCurrent if the load does work on gradient variations.

    Gradient variations are ``D0 z`` with z vanishing on vertices touched by
    prescribed edges. The measure is the per-vertex cancellation ratio
    ``|D0^T f| / (|D0|^T |f|)``.
    """
    D0 = mesh.D0.astype(float)
    f = np.where(fixed_edges, 0.0, load)
    if not np.any(f):
        return 0.0
    pinned = np.zeros(mesh.n_vertices, dtype=bool)
    pinned[mesh.edges[fixed_edges].ravel()] = True
    div = np.abs(D0.T @ f)[~pinned]
    scale = (abs(D0).T @ np.abs(f))[~pinned]
    if not len(div):
        return 0.0
    ratio = float(np.max(div) / max(np.max(scale), 1e-300))
    if ratio > tol:
        raise NonSolenoidalCurrent(f"current/surface sources are not divergence free "
                                   f"(gradient component ratio {ratio:.3e} > {tol:g})")
    return ratio


def element_metrics(G, n):
    return Metric(np.broadcast_to(G.g, (n, 3, 3)), G.orientation_sign)
