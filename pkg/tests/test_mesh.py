import numpy as np
import pytest
from hypothesis import given, strategies as st

from magelastic.algebra import PCovector, exterior_derivative_at
from magelastic.errors import (DegenerateElement, InvalidDegree, MeshFormatError, NotOnSurface,
                               OutsideElement)
from magelastic.mesh import (Cochain, SimplicialMesh, displacement_gradient, element_curl, exterior_derivative,
                             face_dot_wedge, generate_box_mesh, integrate, interpolate_form, read_mesh,
                             trace_boundary, whitney_value, write_mesh)
from magelastic.valued import CovectorValuedForm, VectorValuedForm, dot_wedge


@pytest.mark.parametrize("n, nv, nt", [(1, 8, 6), (2, 27, 48), (3, 64, 162)])
def test_box_counts(n, nv, nt):
    mesh = generate_box_mesh(divisions=(n, n, n))
    assert (mesh.n_vertices, mesh.n_tets) == (nv, nt)
    assert mesh.volumes.sum() == pytest.approx(1.0)
    assert mesh.is_boundary_face.sum() == 12 * n * n


@given(st.tuples(*[st.floats(0.1, 5.0)] * 3), st.tuples(*[st.integers(1, 4)] * 3))
def test_volume_sum_equals_box(extent, divisions):
    mesh = generate_box_mesh(extent, divisions)
    assert np.all(mesh.volumes > 0)
    assert mesh.volumes.sum() == pytest.approx(np.prod(extent), rel=1e-12)


@pytest.mark.parametrize("bad", [(0, 1, 1), (1, -1, 2)])
def test_zero_divisions_rejected(bad):
    with pytest.raises(ValueError):
        generate_box_mesh(divisions=bad)


@given(st.integers(1, 6), st.floats(0.0, 0.24), st.integers(0, 1000))
def test_incidence_complex(n, jitter, seed):
    mesh = generate_box_mesh(divisions=(n, n + 1, n), jitter=jitter, seed=seed)
    assert abs(mesh.D1 @ mesh.D0).max() == 0
    assert abs(mesh.D2 @ mesh.D1).max() == 0
    assert mesh.D0.dtype.kind == "i"


def test_boundary_faces_have_one_tet(jittered4):
    one = (jittered4.face_tets[:, 1] < 0)
    assert np.array_equal(one, jittered4.is_boundary_face)


def test_edges_and_faces_sorted(jittered4):
    assert np.all(np.diff(jittered4.edges, axis=1) > 0)
    assert np.all(np.diff(jittered4.faces, axis=1) > 0)


def test_outward_normals_point_out(cube4):
    bf = cube4.boundary_face_indices()
    n = cube4.outward_area_vectors(bf, cube4.face_tets[bf, 0])
    assert np.all(np.einsum("fi,fi->f", n, cube4.face_centroids[bf] - 0.5) > 0)
    assert np.sum(np.linalg.norm(n, axis=1)) == pytest.approx(6.0)


def test_default_boundary_tags(cube4):
    bf = cube4.boundary_face_indices()
    c = cube4.face_centroids[bf]
    tags = cube4.boundary_tags[bf]
    assert np.all(np.isclose(c[tags == 1, 0], 0.0)) and np.all(np.isclose(c[tags == 6, 2], 1.0))
    assert np.bincount(tags).tolist() == [0] + [32] * 6


def test_d_of_random_zero_cochain_vanishes_twice(jittered4, rng):
    c = Cochain(jittered4, 0, rng.normal(size=jittered4.n_vertices))
    assert np.abs(exterior_derivative(exterior_derivative(c)).values).max() < 1e-12
    with pytest.raises(InvalidDegree):
        exterior_derivative(Cochain(jittered4, 3, np.zeros(jittered4.n_tets)))


def test_closed_form_interpolant_is_closed(jittered4):
    a = interpolate_form(jittered4, 1, lambda p: np.broadcast_to([1.0, 0.0, 0.0], p.shape))
    V = jittered4.vertices
    assert np.allclose(a.values, V[jittered4.edges[:, 1], 0] - V[jittered4.edges[:, 0], 0])
    assert np.abs(exterior_derivative(a).values).max() < 1e-14


def test_stokes_for_x_dy(jittered4):
    a = interpolate_form(jittered4, 1, lambda p: np.stack([0 * p[..., 0], p[..., 0], 0 * p[..., 0]], axis=-1))
    da = exterior_derivative(a).values
    x0, x1, x2 = (jittered4.vertices[jittered4.faces[:, k]] for k in range(3))
    u, v = x1 - x0, x2 - x0
    area_xy = 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
    assert np.allclose(da, area_xy, atol=1e-14)


@given(st.integers(0, 2 ** 32 - 1))
def test_displacement_gradient_affine_exact(seed):
    rng = np.random.default_rng(seed)
    mesh = generate_box_mesh(divisions=(2, 2, 2), jitter=0.2, seed=seed % 1000)
    A, c = rng.normal(size=(3, 3)), rng.normal(size=3)
    eps = displacement_gradient(mesh, mesh.vertices @ A.T + c)
    assert np.max(np.abs(eps.components - A)) <= 1e-13 * max(1.0, np.abs(A).max()) * 10


def test_displacement_gradient_examples(cube4):
    assert np.abs(displacement_gradient(cube4, np.ones((cube4.n_vertices, 3))).components).max() < 1e-14
    nu = np.zeros((cube4.n_vertices, 3))
    nu[:, 0] = cube4.vertices[:, 0]
    eps = displacement_gradient(cube4, nu).components
    assert np.allclose(eps, np.diag([1.0, 0.0, 0.0]))


def random_bary(rng):
    lam = rng.dirichlet(np.ones(4))
    return lam


def test_whitney_reproduction(jittered4, rng):
    c0 = Cochain(jittered4, 0, jittered4.vertices[:, 0].copy())
    c1 = interpolate_form(jittered4, 1, lambda p: np.broadcast_to([1.0, 0.0, 0.0], p.shape))
    const2 = np.array([0.3, -1.2, 0.7])
    c2 = interpolate_form(jittered4, 2, lambda p: np.broadcast_to(const2, p.shape))
    for t in rng.integers(0, jittered4.n_tets, 10):
        lam = random_bary(rng)
        x = lam @ jittered4.vertices[jittered4.tets[t]]
        assert whitney_value(c0, t, lam).components[0] == pytest.approx(x[0])
        assert np.allclose(whitney_value(c1, t, lam).components, [1.0, 0.0, 0.0])
        assert np.allclose(whitney_value(c2, t, lam).components, const2)


def reconstruction_jacobian(c, tet, lam, h=1e-3):
    """Jacobian of the Whitney reconstruction along x by differencing barycentric moves."""
    mesh = c.mesh
    grads = mesh.barycentric_gradients[tet]  # (4, 3)
    cols = []
    for m in range(3):
        step = grads[:, m] * h
        plus = whitney_value(c, tet, lam + step).components
        minus = whitney_value(c, tet, lam - step).components
        cols.append((plus - minus) / (2 * h))
    return np.stack(cols, axis=-1)


def test_whitney_commutes_with_d(jittered4, rng):
    a = Cochain(jittered4, 1, rng.normal(size=len(jittered4.edges)))
    da = exterior_derivative(a)
    curls = element_curl(jittered4, a.values)
    for t in rng.integers(0, jittered4.n_tets, 10):
        lam = np.full(4, 0.25)
        J = reconstruction_jacobian(a, t, lam)
        d_rec = exterior_derivative_at(J, 1)
        rec_d = whitney_value(da, t, lam).components
        assert np.allclose(d_rec, rec_d, atol=1e-10)
        assert np.allclose(curls.components[t], rec_d, atol=1e-12)


def test_whitney_value_outside(unit_tet_mesh):
    c = Cochain(unit_tet_mesh, 0, np.zeros(4))
    with pytest.raises(OutsideElement):
        whitney_value(c, 0, [0.5, 0.6, -0.1, 0.0])
    with pytest.raises(OutsideElement):
        whitney_value(c, 0, [0.5, 0.5, 0.5, 0.5])


def test_integrate(cube4, rng):
    one = PCovector(3, np.ones((cube4.n_tets, 1)))
    assert integrate(cube4, one) == pytest.approx(1.0)
    f, g = rng.normal(size=(2, cube4.n_tets, 1))
    lhs = integrate(cube4, PCovector(3, 2 * f + 3 * g))
    assert lhs == pytest.approx(2 * integrate(cube4, PCovector(3, f)) + 3 * integrate(cube4, PCovector(3, g)))
    with pytest.raises(InvalidDegree):
        integrate(cube4, PCovector(2, np.ones((cube4.n_tets, 3))))


def test_integrate_region_mask():
    mesh = generate_box_mesh(divisions=(4, 4, 4), region_rule=lambda c: np.where(c[:, 2] < 0.5, 2, 1))
    one = PCovector(3, np.ones((mesh.n_tets, 1)))
    assert integrate(mesh, one, regions=[2]) == pytest.approx(0.5)


def test_trace_of_dz_on_z_face(cube4):
    faces = cube4.boundary_face_indices([5, 6])
    t = trace_boundary(cube4, PCovector(1, [0.0, 0.0, 1.0]), faces, surface=[5, 6])
    assert np.abs(t.components).max() < 1e-15


def test_trace_naturality(jittered4, rng):
    faces = rng.choice(len(jittered4.faces), 25, replace=False)
    omega = CovectorValuedForm(2, rng.normal(size=(25, 3, 3)))
    v = VectorValuedForm(0, rng.normal(size=(25, 3, 1)))
    _, t1, t2 = jittered4.face_frames(faces)
    direct = dot_wedge(omega, v)(t1, t2)
    traced = face_dot_wedge(trace_boundary(jittered4, omega, faces), trace_boundary(jittered4, v, faces))
    assert np.allclose(traced.components[:, 0], direct, atol=1e-12)


def test_trace_errors(cube4):
    inner = np.flatnonzero(~cube4.is_boundary_face)[:2]
    with pytest.raises(NotOnSurface):
        trace_boundary(cube4, PCovector(1, [1.0, 0, 0]), inner, surface=[1])
    with pytest.raises(InvalidDegree):
        trace_boundary(cube4, PCovector(3, [1.0]), cube4.boundary_face_indices([1]))


def test_submesh_boundary_of_slab():
    mesh = generate_box_mesh(divisions=(8, 8, 8), region_rule=lambda c: np.where(np.abs(c[:, 2] - 0.5) < 0.125, 2, 1))
    faces, inside, outside = mesh.submesh_boundary([2])
    assert np.all(mesh.regions[inside] == 2)
    interface = outside >= 0
    assert np.all(mesh.regions[outside[interface]] == 1)
    assert mesh.face_areas(faces[interface]).sum() == pytest.approx(2.0)
    assert mesh.face_areas(faces[~interface]).sum() == pytest.approx(4 * 0.25)


def test_mesh_file_round_trip(tmp_path, jittered4):
    path = tmp_path / "m.mesh"
    write_mesh(jittered4, path)
    back = read_mesh(path)
    assert np.array_equal(back.vertices, jittered4.vertices)
    assert np.array_equal(back.tets, jittered4.tets)
    assert np.array_equal(back.boundary_tags, jittered4.boundary_tags)
    assert np.array_equal(back.regions, jittered4.regions)


@pytest.mark.parametrize("text, line", [
    ("mesh3d 1 0\n", 1),
    ("mesh3d 4 1 0\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 one\nt 0 1 2 3 1\n", 5),
    ("mesh3d 4 1 0\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nt 0 1 2 9 1\n", 6),
    ("mesh3d 4 1 0\nv 0 0 0\nv 1 0 0\nv 0 1 0\nt 0 1 2 3 1\nv 0 0 1\n", 5),
])
def test_mesh_format_errors_carry_line(tmp_path, text, line):
    path = tmp_path / "bad.mesh"
    path.write_text(text)
    with pytest.raises(MeshFormatError) as info:
        read_mesh(path)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_degenerate_element():
    V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    with pytest.raises(DegenerateElement):
        SimplicialMesh(V, np.array([[0, 1, 2, 3]]))


def test_orientation_fixed():
    V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    mesh = SimplicialMesh(V, np.array([[0, 2, 1, 3]]))
    assert mesh.volumes[0] == pytest.approx(1 / 6)
