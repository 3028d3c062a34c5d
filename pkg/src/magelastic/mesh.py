"""Tetrahedral meshes, cochains and lowest-order Whitney forms.

Simplices are oriented by increasing vertex id, except tetrahedra, which
keep a vertex order with positive volume (the last two vertices are swapped
at build time when needed). The incidence matrices ``D0`` (edges x vertices),
``D1`` (faces x edges) and ``D2`` (tets x faces) are the coboundary maps on
cochains.
"""
import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .algebra import BASIS, DIM, SIZE, WEDGE_TABLES, PCovector
from .errors import DegenerateElement, InvalidDegree, MeshFormatError, NotOnSurface, OutsideElement
from .quadrature import line_rule, triangle_rule, tet_rule
from .valued import VectorValuedForm

LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
# face m is opposite local vertex m
LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))

DEFAULT_BOUNDARY_TAGS = {(0, -1): 1, (0, 1): 2, (1, -1): 3, (1, 1): 4, (2, -1): 5, (2, 1): 6}


def _inversions3(a, b, c):
    return (a > b).astype(int) + (a > c) + (b > c)


class SimplicialMesh:
    """Immutable tetrahedral complex with derived edges, faces and incidences.

    Parameters
    ----------
    vertices : (nv, 3) array
    tets : (nt, 4) integer array
    regions : (nt,) integer array, optional
        Region tag per tetrahedron (default 1).
    boundary_faces, boundary_tags : optional
        Vertex triples of boundary faces and their integer tags. Untagged
        boundary faces get tag 0.
    """

    def __init__(self, vertices, tets, regions=None, boundary_faces=None, boundary_tags=None):
        V = np.array(vertices, dtype=float)
        T = np.array(tets, dtype=np.int64)
        if V.ndim != 2 or V.shape[1] != 3:
            raise ValueError("vertices must have shape (nv, 3)")
        if T.ndim != 2 or T.shape[1] != 4:
            raise ValueError("tets must have shape (nt, 4)")
        nv = len(V)
        if T.size and (T.min() < 0 or T.max() >= nv):
            raise ValueError("tet references a vertex id out of range")
        self.vertices = V
        self.regions = (np.ones(len(T), dtype=np.int64) if regions is None
                        else np.array(regions, dtype=np.int64))
        if self.regions.shape != (len(T),):
            raise ValueError("one region tag per tet required")

        M = np.stack([V[T[:, k]] - V[T[:, 0]] for k in (1, 2, 3)], axis=-1)  # columns = edge vectors
        det = np.linalg.det(M)
        scale = np.max(np.abs(M), axis=(1, 2), initial=0.0) ** 3
        bad = np.abs(det) <= 1e-12 * np.maximum(scale, 1e-300)
        if np.any(bad):
            raise DegenerateElement(f"{int(bad.sum())} tetrahedra have (near) zero volume, first is #{int(np.argmax(bad))}")
        flip = det < 0
        T[flip, 2], T[flip, 3] = T[flip, 3].copy(), T[flip, 2].copy()
        M[flip, :, 1], M[flip, :, 2] = M[flip, :, 2].copy(), M[flip, :, 1].copy()
        self.tets = T
        self.volumes = np.abs(det) / 6.0
        inv = np.linalg.inv(M)  # row k = gradient of barycentric k+1
        self.barycentric_gradients = np.concatenate([-inv.sum(axis=1, keepdims=True), inv], axis=1)

        self._build_edges()
        self._build_faces()
        for arr in (self.vertices, self.tets, self.regions, self.volumes, self.barycentric_gradients,
                    self.edges, self.faces, self.tet_edges, self.tet_faces):
            arr.setflags(write=False)

        self.boundary_tags = np.zeros(len(self.faces), dtype=np.int64)
        if boundary_faces is not None and len(boundary_faces):
            bf = np.array(boundary_faces, dtype=np.int64)
            tags = np.broadcast_to(np.asarray(boundary_tags if boundary_tags is not None else 1), (len(bf),))
            idx = self.find_faces(bf)
            if np.any(idx < 0) or not np.all(self.is_boundary_face[idx]):
                raise ValueError("a tagged face is not a boundary face of the mesh")
            self.boundary_tags[idx] = tags

    # -- topology -------------------------------------------------------
    def _build_edges(self):
        T, nv = self.tets, self.n_vertices
        local = np.array(LOCAL_EDGES)
        a, b = T[:, local[:, 0]], T[:, local[:, 1]]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys, inverse = np.unique((lo * nv + hi).ravel(), return_inverse=True)
        self._edge_keys = keys
        self.edges = np.stack([keys // nv, keys % nv], axis=1)
        self.tet_edges = inverse.reshape(T.shape[0], 6)
        # local endpoints ordered by global id
        swap = a > b
        loc = np.broadcast_to(local, (T.shape[0], 6, 2)).copy()
        loc[swap] = loc[swap][:, ::-1]
        self.tet_edge_local = loc
        self.D0 = sp.csr_matrix(
            (np.tile([-1, 1], len(keys)), (np.repeat(np.arange(len(keys)), 2), self.edges.ravel())),
            shape=(len(keys), nv), dtype=np.int64)

    def _build_faces(self):
        T, nv = self.tets, self.n_vertices
        nt = T.shape[0]
        local = np.array(LOCAL_FACES)
        tri = T[:, local]  # (nt, 4, 3)
        order = np.argsort(tri, axis=-1, kind="stable")
        srt = np.take_along_axis(tri, order, axis=-1)
        keys, inverse = np.unique(((srt[..., 0] * nv + srt[..., 1]) * nv + srt[..., 2]).ravel(),
                                  return_inverse=True)
        self._face_keys = keys
        faces = np.stack([keys // (nv * nv), (keys // nv) % nv, keys % nv], axis=1)
        self.faces = faces
        self.tet_faces = inverse.reshape(nt, 4)
        self.tet_face_local = np.take_along_axis(np.broadcast_to(local, (nt, 4, 3)), order, axis=-1)
        parity = 1 - 2 * (_inversions3(tri[..., 0], tri[..., 1], tri[..., 2]) % 2)
        self.tet_face_signs = parity * np.array([1, -1, 1, -1])
        self.tet_face_signs.setflags(write=False)

        nf = len(faces)
        e = self.find_edges
        cols = np.stack([e(faces[:, [1, 2]]), e(faces[:, [0, 2]]), e(faces[:, [0, 1]])], axis=1)
        self.D1 = sp.csr_matrix((np.tile([1, -1, 1], nf), (np.repeat(np.arange(nf), 3), cols.ravel())),
                                shape=(nf, len(self.edges)), dtype=np.int64)
        self.D2 = sp.csr_matrix((self.tet_face_signs.ravel(), (np.repeat(np.arange(nt), 4), self.tet_faces.ravel())),
                                shape=(nt, nf), dtype=np.int64)

        counts = np.bincount(self.tet_faces.ravel(), minlength=nf)
        if counts.max(initial=0) > 2:
            raise DegenerateElement("a face is shared by more than two tetrahedra")
        self.is_boundary_face = counts == 1
        face_tets = -np.ones((nf, 2), dtype=np.int64)
        flat = self.tet_faces.ravel()
        owner = np.repeat(np.arange(nt), 4)
        first = np.full(nf, -1, dtype=np.int64)
        order = np.argsort(flat, kind="stable")
        f_sorted, t_sorted = flat[order], owner[order]
        starts = np.r_[0, np.flatnonzero(np.diff(f_sorted)) + 1]
        first[f_sorted[starts]] = t_sorted[starts]
        face_tets[:, 0] = first
        second = np.ones(len(f_sorted), dtype=bool)
        second[starts] = False
        face_tets[f_sorted[second], 1] = t_sorted[second]
        self.face_tets = face_tets
        for arr in (self.is_boundary_face, self.face_tets, self.tet_face_local, self.tet_edge_local):
            arr.setflags(write=False)

    def find_edges(self, pairs):
        """Edge indices of vertex pairs (any order); -1 where absent."""
        pairs = np.asarray(pairs, dtype=np.int64)
        key = np.min(pairs, axis=-1) * self.n_vertices + np.max(pairs, axis=-1)
        return self._lookup(self._edge_keys, key)

    def find_faces(self, triples):
        t = np.sort(np.asarray(triples, dtype=np.int64), axis=-1)
        nv = self.n_vertices
        return self._lookup(self._face_keys, (t[..., 0] * nv + t[..., 1]) * nv + t[..., 2])

    @staticmethod
    def _lookup(keys, query):
        pos = np.clip(np.searchsorted(keys, query), 0, len(keys) - 1)
        return np.where(keys[pos] == query, pos, -1)

    # -- sizes and geometry -----------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_tets(self):
        return len(self.tets)

    def count(self, p):
        return (self.n_vertices, len(self.edges), len(self.faces), self.n_tets)[p]

    def incidence(self, p):
        """Coboundary matrix from p-cochains to (p+1)-cochains."""
        if p not in (0, 1, 2):
            raise InvalidDegree("no coboundary out of degree 3 in three dimensions")
        return (self.D0, self.D1, self.D2)[p]

    @property
    def tet_centroids(self):
        return self.vertices[self.tets].mean(axis=1)

    @property
    def face_centroids(self):
        return self.vertices[self.faces].mean(axis=1)

    def face_frames(self, faces=None):
        """Origin and the two edge vectors from the lowest-id vertex of each face."""
        F = self.faces if faces is None else self.faces[faces]
        x = self.vertices[F]
        return x[..., 0, :], x[..., 1, :] - x[..., 0, :], x[..., 2, :] - x[..., 0, :]

    def face_areas(self, faces=None):
        _, t1, t2 = self.face_frames(faces)
        return 0.5 * np.linalg.norm(np.cross(t1, t2), axis=-1)

    def face_orientation(self, faces, tets):
        """+1 where the face frame (t1, t2) followed by the outward normal of ``tets`` is right handed."""
        faces, tets = np.asarray(faces), np.asarray(tets)
        _, t1, t2 = self.face_frames(faces)
        local = np.argmax(self.tet_faces[tets] == faces[..., None], axis=-1)
        opposite = self.vertices[self.tets[tets, local]]
        inward = opposite - self.vertices[self.faces[faces, 0]]
        return -np.sign(np.einsum("...i,...i->...", np.cross(t1, t2), inward)).astype(int)

    def outward_area_vectors(self, faces, tets):
        """Area-weighted normals of ``faces`` pointing out of ``tets``."""
        _, t1, t2 = self.face_frames(faces)
        return 0.5 * np.cross(t1, t2) * self.face_orientation(faces, tets)[..., None]

    def boundary_face_indices(self, tags=None):
        mask = self.is_boundary_face.copy()
        if tags is not None:
            mask &= np.isin(self.boundary_tags, list(tags))
        return np.flatnonzero(mask)

    def region_mask(self, regions=None):
        if regions is None:
            return np.ones(self.n_tets, dtype=bool)
        return np.isin(self.regions, list(regions))

    def submesh_boundary(self, regions):
        """Faces on the boundary of the union of ``regions``.

        Returns ``(faces, inside_tet, outside_tet)``, outside_tet = -1 where
        the face lies on the mesh boundary.
        """
        inside = self.region_mask(regions)
        ft = self.face_tets
        a = np.where(ft[:, 0] >= 0, inside[ft[:, 0]], False)
        b = np.where(ft[:, 1] >= 0, inside[np.maximum(ft[:, 1], 0)], False)
        faces = np.flatnonzero(a ^ b)
        in_t = np.where(a[faces], ft[faces, 0], ft[faces, 1])
        out_t = np.where(a[faces], ft[faces, 1], ft[faces, 0])
        return faces, in_t, out_t

    def __repr__(self):
        return (f"SimplicialMesh(vertices={self.n_vertices}, edges={len(self.edges)}, "
                f"faces={len(self.faces)}, tets={self.n_tets})")


def generate_box_mesh(extent=(1.0, 1.0, 1.0), divisions=(1, 1, 1), region_rule=None,
                      boundary_rule=None, origin=(0.0, 0.0, 0.0), jitter=0.0, seed=None):
    """Structured box split into six tetrahedra per cell (Kuhn split).

    Parameters
    ----------
    region_rule : callable, optional
        Maps tet centroids (nt, 3) to integer region tags.
    boundary_rule : callable, optional
        Maps boundary-face centroids and outward unit normals to tags. The
        default tags the sides -x, +x, -y, +y, -z, +z as 1..6.
    jitter : float
        Random displacement of interior vertices as a fraction of the cell
        size (< 0.25 keeps all elements valid).
    """
    div = np.asarray(divisions, dtype=int)
    if div.shape != (3,) or np.any(div < 1):
        raise ValueError(f"divisions must be three positive integers, got {divisions}")
    ext = np.asarray(extent, dtype=float)
    if np.any(ext <= 0):
        raise ValueError("extent must be positive")
    nx, ny, nz = div
    axes = [np.linspace(0.0, e, n + 1) + o for e, n, o in zip(ext, div, origin)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    V = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def vid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    I, J, K = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    I, J, K = I.ravel(), J.ravel(), K.ravel()
    tets = []
    for perm in itertools.permutations(range(3)):
        corner = np.zeros(3, dtype=int)
        path = [corner.copy()]
        for axis in perm:
            corner[axis] = 1
            path.append(corner.copy())
        tets.append(np.stack([vid(I + c[0], J + c[1], K + c[2]) for c in path], axis=1))
    T = np.stack(tets, axis=1).reshape(-1, 4)

    if jitter:
        rng = np.random.default_rng(seed)
        h = ext / div
        interior = np.all((V > np.array(origin) + 1e-12 * ext) & (V < np.array(origin) + ext - 1e-12 * ext), axis=1)
        V[interior] += rng.uniform(-jitter, jitter, size=(int(interior.sum()), 3)) * h

    centroids = V[T].mean(axis=1)
    regions = np.ones(len(T), dtype=np.int64) if region_rule is None else np.asarray(region_rule(centroids))
    mesh = SimplicialMesh(V, T, regions)
    bf = mesh.boundary_face_indices()
    owner = mesh.face_tets[bf, 0]
    normals = mesh.outward_area_vectors(bf, owner)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    if boundary_rule is None:
        axis = np.argmax(np.abs(normals), axis=1)
        side = np.sign(normals[np.arange(len(bf)), axis]).astype(int)
        tags = np.array([DEFAULT_BOUNDARY_TAGS[(a, s)] for a, s in zip(axis, side)], dtype=np.int64)
    else:
        tags = np.asarray(boundary_rule(mesh.face_centroids[bf], normals), dtype=np.int64)
    mesh.boundary_tags[bf] = tags
    return mesh


# -- file format --------------------------------------------------------
def write_mesh(mesh, path):
    bf = mesh.boundary_face_indices()
    with open(path, "w") as fh:
        fh.write(f"mesh3d {mesh.n_vertices} {mesh.n_tets} {len(bf)}\n")
        for x in mesh.vertices:
            fh.write("v {:.17g} {:.17g} {:.17g}\n".format(*x))
        for t, r in zip(mesh.tets, mesh.regions):
            fh.write(f"t {t[0]} {t[1]} {t[2]} {t[3]} {r}\n")
        for f in bf:
            a, b, c = mesh.faces[f]
            fh.write(f"f {a} {b} {c} {mesh.boundary_tags[f]}\n")


def read_mesh(path):
    """Parse the ``mesh3d`` ASCII format; errors carry 1-based line numbers."""
    with open(path) as fh:
        lines = [(n, ln.split()) for n, ln in enumerate(fh, start=1)]
    lines = [(n, parts) for n, parts in lines if parts and not parts[0].startswith("#")]
    if not lines:
        raise MeshFormatError("empty mesh file")
    n, head = lines[0]
    if len(head) != 4 or head[0] != "mesh3d":
        raise MeshFormatError("expected header 'mesh3d <nv> <nt> <nbf>'", line=n)
    try:
        nv, nt, nbf = (int(s) for s in head[1:])
    except ValueError:
        raise MeshFormatError("header counts must be integers", line=n) from None
    body = lines[1:]
    if len(body) != nv + nt + nbf:
        where = body[-1][0] if body else n
        raise MeshFormatError(f"expected {nv + nt + nbf} records after the header, found {len(body)}", line=where)
    V = np.zeros((nv, 3))
    T = np.zeros((nt, 4), dtype=np.int64)
    R = np.zeros(nt, dtype=np.int64)
    F = np.zeros((nbf, 3), dtype=np.int64)
    tags = np.zeros(nbf, dtype=np.int64)
    spec = [("v", nv, 3, float), ("t", nt, 5, int), ("f", nbf, 4, int)]
    k = 0
    for kind, count, width, conv in spec:
        for i in range(count):
            n, parts = body[k]
            k += 1
            if parts[0] != kind or len(parts) != width + 1:
                raise MeshFormatError(f"expected a '{kind}' record with {width} values", line=n)
            try:
                vals = [conv(s) for s in parts[1:]]
            except ValueError:
                raise MeshFormatError(f"malformed number in '{kind}' record", line=n) from None
            if kind == "v":
                V[i] = vals
            elif kind == "t":
                T[i], R[i] = vals[:4], vals[4]
                if min(vals[:4]) < 0 or max(vals[:4]) >= nv:
                    raise MeshFormatError("vertex id out of range", line=n)
            else:
                F[i], tags[i] = vals[:3], vals[3]
    try:
        return SimplicialMesh(V, T, R, F, tags)
    except DegenerateElement:
        raise
    except ValueError as exc:
        raise MeshFormatError(str(exc)) from None


# -- cochains -------------------------------------------------------------
@dataclass(frozen=True)
class Cochain:
    """One real value per p-simplex of ``mesh``."""

    mesh: SimplicialMesh
    degree: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if self.degree not in (0, 1, 2, 3):
            raise InvalidDegree(f"cochain degree must be 0..3, got {self.degree}")
        if vals.shape[:1] != (self.mesh.count(self.degree),):
            raise ValueError(f"degree-{self.degree} cochain needs {self.mesh.count(self.degree)} values, got {vals.shape}")
        object.__setattr__(self, "values", vals)

    def __add__(self, other):
        return Cochain(self.mesh, self.degree, self.values + other.values)

    def __sub__(self, other):
        return Cochain(self.mesh, self.degree, self.values - other.values)

    def __mul__(self, s):
        return Cochain(self.mesh, self.degree, self.values * s)

    __rmul__ = __mul__


def exterior_derivative(c):
    if c.degree >= 3:
        raise InvalidDegree("no exterior derivative of a 3-cochain in three dimensions")
    return Cochain(c.mesh, c.degree + 1, c.mesh.incidence(c.degree) @ c.values)


def interpolate_form(mesh, degree, func, order=4):
    """De Rham map: integrate a smooth p-form over every p-simplex.

    ``func(points)`` returns component arrays of shape (..., C(3, p)).
    """
    V = mesh.vertices
    if degree == 0:
        return Cochain(mesh, 0, np.asarray(func(V))[..., 0])
    if degree == 1:
        lam, w = line_rule(order)
        xa, xb = V[mesh.edges[:, 0]], V[mesh.edges[:, 1]]
        pts = lam[:, 0, None, None] * xa + lam[:, 1, None, None] * xb
        comps = np.asarray(func(pts))
        return Cochain(mesh, 1, np.einsum("q,qei,ei->e", w, comps, xb - xa))
    if degree == 2:
        lam, w = triangle_rule(order)
        x = V[mesh.faces]
        pts = np.einsum("qk,fki->qfi", lam, x)
        comps = np.asarray(func(pts))
        _, t1, t2 = mesh.face_frames()
        minors = np.stack([t1[:, a] * t2[:, b] - t1[:, b] * t2[:, a] for a, b in BASIS[2]], axis=-1)
        return Cochain(mesh, 2, 0.5 * np.einsum("q,qfk,fk->f", w, comps, minors))
    if degree == 3:
        lam, w = tet_rule(order)
        pts = np.einsum("qk,tki->qti", lam, V[mesh.tets])
        comps = np.asarray(func(pts))
        return Cochain(mesh, 3, mesh.volumes * np.einsum("q,qt->t", w, comps[..., 0]))
    raise InvalidDegree(f"degree must be 0..3, got {degree}")


# -- Whitney forms -------------------------------------------------------
def _gradient_wedges(mesh, tets):
    g = mesh.barycentric_gradients[tets]
    return np.einsum("tia,tjb,abk->tijk", g, g, WEDGE_TABLES[1, 1])


def whitney_edge_forms(mesh, bary, tets=None):
    """Components (nt, 6, 3) of the six edge basis 1-forms at barycentric point ``bary``."""
    tets = np.arange(mesh.n_tets) if tets is None else np.asarray(tets)
    g = mesh.barycentric_gradients[tets]
    loc = mesh.tet_edge_local[tets]
    lam = np.broadcast_to(np.asarray(bary, dtype=float), (len(tets), 4))
    li = np.take_along_axis(lam, loc[..., 0], axis=1)
    lj = np.take_along_axis(lam, loc[..., 1], axis=1)
    gi = np.take_along_axis(g, loc[..., 0, None], axis=1)
    gj = np.take_along_axis(g, loc[..., 1, None], axis=1)
    return li[..., None] * gj - lj[..., None] * gi


def whitney_edge_curls(mesh, tets=None):
    """Constant exterior derivatives (nt, 6, 3) of the edge basis forms."""
    tets = np.arange(mesh.n_tets) if tets is None else np.asarray(tets)
    gw = _gradient_wedges(mesh, tets)
    loc = mesh.tet_edge_local[tets]
    r = np.arange(len(tets))[:, None]
    return 2.0 * gw[r, loc[..., 0], loc[..., 1]]


def whitney_face_coefficients(mesh, tets=None):
    """Face basis 2-forms as linear functions of the barycentrics.

    Returns ``c`` of shape (nt, 4 faces, 4 vertices, 3) with
    ``w_f = sum_m lambda_m c[f, m]``.
    """
    tets = np.arange(mesh.n_tets) if tets is None else np.asarray(tets)
    gw = _gradient_wedges(mesh, tets)
    loc = mesh.tet_face_local[tets]
    nt = len(tets)
    out = np.zeros((nt, 4, 4, 3))
    r = np.arange(nt)[:, None]
    i, j, k = loc[..., 0], loc[..., 1], loc[..., 2]
    f = np.arange(4)[None, :]
    out[r, f, i] = 2.0 * gw[r, j, k]
    out[r, f, j] = -2.0 * gw[r, i, k]
    out[r, f, k] = 2.0 * gw[r, i, j]
    return out


def _check_bary(bary):
    lam = np.asarray(bary, dtype=float)
    if lam.shape[-1] != 4 or np.any(lam < -1e-12) or np.any(np.abs(lam.sum(axis=-1) - 1) > 1e-12):
        raise OutsideElement(f"barycentric coordinates {lam.tolist()} are not inside the element")
    return lam


def whitney_value(c, tet, bary):
    """Value at a point of the Whitney reconstruction of cochain ``c`` on one tet."""
    mesh = c.mesh
    lam = _check_bary(bary)
    if c.degree == 0:
        return PCovector(0, np.asarray(lam @ c.values[mesh.tets[tet]])[..., None])
    if c.degree == 1:
        w = whitney_edge_forms(mesh, lam, [tet])[0]
        return PCovector(1, c.values[mesh.tet_edges[tet]] @ w)
    if c.degree == 2:
        coef = whitney_face_coefficients(mesh, [tet])[0]
        w = np.einsum("m,fmk->fk", lam, coef)
        return PCovector(2, c.values[mesh.tet_faces[tet]] @ w)
    return PCovector(3, [c.values[tet] / mesh.volumes[tet]])


def element_curl(mesh, a):
    """Per-tet constant 2-form ``d`` of the Whitney reconstruction of edge values ``a``."""
    return PCovector(2, np.einsum("te,tek->tk", np.asarray(a)[mesh.tet_edges], whitney_edge_curls(mesh)))


# -- fields on the mesh --------------------------------------------------
def displacement_gradient(mesh, nu):
    """Per-tet gradient of the piecewise-affine interpolant of nodal vectors ``nu``."""
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (mesh.n_vertices, 3):
        raise ValueError(f"nodal field must have shape ({mesh.n_vertices}, 3)")
    return VectorValuedForm(1, np.einsum("tai,tal->til", nu[mesh.tets], mesh.barycentric_gradients))


def integrate(mesh, field, regions=None, orientation_sign=1):
    """Integral of a piecewise-constant 3-form (one value per tet)."""
    comps = field.components[..., 0] if isinstance(field, PCovector) else np.asarray(field, dtype=float)
    if isinstance(field, PCovector) and field.degree != 3:
        raise InvalidDegree("only 3-forms integrate over the volume")
    mask = mesh.region_mask(regions)
    return float(orientation_sign * np.sum((comps * mesh.volumes)[mask]))


# -- boundary traces -------------------------------------------------------
FACE_SIZE = {0: 1, 1: 2, 2: 1}
FACE_WEDGE = {
    (0, 0): np.ones((1, 1, 1)), (0, 1): np.eye(2)[None], (1, 0): np.eye(2)[:, None],
    (0, 2): np.ones((1, 1, 1)), (2, 0): np.ones((1, 1, 1)),
    (1, 1): np.array([[[0.0], [1.0]], [[-1.0], [0.0]]]),
}


@dataclass(frozen=True)
class FaceForm:
    """Form on a face, components in the face frame (t1, t2).

    ``kind`` is "real", "vector" or "covector"; valued forms carry a row
    axis of length 3 before the component axis (the value part stays a
    full 3-D vector or covector).
    """

    degree: int
    components: np.ndarray
    kind: str = "real"


def _pull_back(comps, degree, t1, t2):
    if degree == 0:
        return comps
    if degree == 1:
        return np.stack([np.einsum("...i,...i->...", comps, t1), np.einsum("...i,...i->...", comps, t2)], axis=-1)
    minors = np.stack([t1[..., a] * t2[..., b] - t1[..., b] * t2[..., a] for a, b in BASIS[2]], axis=-1)
    return np.einsum("...k,...k->...", comps, minors)[..., None]


def trace_boundary(mesh, value, faces, surface=None):
    """Pull a pointwise form back to the frames of ``faces``.

    ``value`` may be unbatched or batched with one entry per face. With
    ``surface`` (a collection of boundary tags) every face must be a
    boundary face carrying one of those tags.
    """
    faces = np.asarray(faces)
    if surface is not None:
        ok = mesh.is_boundary_face[faces] & np.isin(mesh.boundary_tags[faces], list(surface))
        if not np.all(ok):
            raise NotOnSurface(f"face(s) {np.atleast_1d(faces)[~np.atleast_1d(ok)].tolist()} not on surface {sorted(surface)}")
    if value.degree == 3:
        raise InvalidDegree("a 3-form has no trace on a 2-dimensional face")
    _, t1, t2 = mesh.face_frames(faces)
    if isinstance(value, PCovector):
        return FaceForm(value.degree, _pull_back(value.components, value.degree, t1, t2), "real")
    kind = "vector" if isinstance(value, VectorValuedForm) else "covector"
    comps = _pull_back(value.components, value.degree, t1[..., None, :], t2[..., None, :])
    return FaceForm(value.degree, comps, kind)


def face_dot_wedge(left, right):
    """Pairing product of a covector-valued and a vector-valued face form."""
    if {left.kind, right.kind} != {"vector", "covector"}:
        raise TypeError("face_dot_wedge pairs a covector-valued with a vector-valued face form")
    p, q = left.degree, right.degree
    if p + q > 2:
        raise InvalidDegree("degree exceeds the face dimension")
    comps = np.einsum("...ia,...ib,abk->...k", left.components, right.components, FACE_WEDGE[p, q])
    return FaceForm(p + q, comps, "real")


__all__ = [
    "SimplicialMesh", "generate_box_mesh", "read_mesh", "write_mesh", "Cochain", "exterior_derivative",
    "interpolate_form", "whitney_value", "whitney_edge_forms", "whitney_edge_curls",
    "whitney_face_coefficients", "element_curl", "displacement_gradient", "integrate",
    "trace_boundary", "FaceForm", "face_dot_wedge", "DIM", "SIZE",
]
