"""Self-verification suite behind ``magelastic verify``.

Each check returns ``(passed, detail)``. The fast level runs algebraic
identities, derivative checks and small-mesh solver checks; the full level
adds refinement studies and the 16^3 coupled comparisons.
"""
import contextlib
import time
from dataclasses import dataclass

import numpy as np

from . import algebra as alg
from . import valued as vf
from .constitutive import (IsotropicElastic, MagnetoElasticEnergy, d1_energy, d2_energy, maxwell_stress)
from .fields import covariant_exterior_derivative, dot_wedge_field, exterior_derivative_field, random_polynomial_field
from .mesh import generate_box_mesh

FD_STEPS = (1e-3, 1e-4, 1e-5)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_metric(rng, n=None):
    """Random SPD metric(s) with eigenvalues in [0.5, 2]."""
    shape = () if n is None else (n,)
    A = rng.normal(size=shape + (3, 3))
    Q, _ = np.linalg.qr(A)
    lam = rng.uniform(0.5, 2.0, size=shape + (3,))
    return alg.Metric(np.einsum("...ij,...j,...kj->...ik", Q, lam, Q))


def _rel(a, b):
    scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0), 1e-300)
    return float(np.max(np.abs(a - b), initial=0.0) / scale)


# -- algebra ---------------------------------------------------------------
def check_isomorphism(rng):
    M = vf.isomorphism_matrix()
    off = M - np.diag(np.diag(M))
    expected = np.array([alg.permutation_sign((j, k, l)) for _ in range(3)
                         for (j, k) in alg.BASIS[2] for l in range(3) if l not in (j, k)], dtype=float)
    sigma = vf.CovectorValuedForm(2, rng.normal(size=(200, 3, 3)))
    back = vf.functional_to_stress(vf.stress_functional(sigma))
    err = float(np.max(np.abs(back.components - sigma.components)))
    ok = not off.any() and np.array_equal(np.diag(M), expected) and err <= 1e-15
    return ok, f"diag={np.diag(M).astype(int).tolist()} round-trip={err:.1e}"


def check_wedge_anticommutativity(rng, n=1000):
    worst = 0.0
    for p in range(4):
        for q in range(4 - p):
            a = alg.PCovector(p, rng.normal(size=(n, alg.SIZE[p])))
            b = alg.PCovector(q, rng.normal(size=(n, alg.SIZE[q])))
            lhs, rhs = alg.wedge(a, b).components, (-1) ** (p * q) * alg.wedge(b, a).components
            worst = max(worst, _rel(lhs, rhs))
    return worst <= 1e-12, f"max rel {worst:.1e}"


def check_dot_wedge_anticommutativity(rng, n=1000):
    worst = 0.0
    for p in range(4):
        for q in range(4 - p):
            s = vf.CovectorValuedForm(p, rng.normal(size=(n, 3, alg.SIZE[p])))
            e = vf.VectorValuedForm(q, rng.normal(size=(n, 3, alg.SIZE[q])))
            lhs, rhs = vf.dot_wedge(s, e).components, (-1) ** (p * q) * vf.dot_wedge(e, s).components
            worst = max(worst, _rel(lhs, rhs))
    return worst <= 1e-12, f"max rel {worst:.1e}"


def check_hodge_pairing(rng, n=1000):
    G = random_metric(rng, n)
    worst = 0.0
    for p in range(4):
        eta = vf.VectorValuedForm(p, rng.normal(size=(n, 3, alg.SIZE[p])))
        beta = vf.VectorValuedForm(p, rng.normal(size=(n, 3, alg.SIZE[p])))
        lhs = vf.dot_wedge(eta, vf.hodge_flat(G, beta)).components[..., 0]
        rhs = vf.inner_product(G, eta, beta) * G.volume_factor
        worst = max(worst, _rel(lhs, rhs))
    return worst <= 1e-12, f"max rel {worst:.1e}"


def check_double_star(rng, n=1000):
    G = random_metric(rng, n)
    worst = 0.0
    for p in range(4):
        a = alg.PCovector(p, rng.normal(size=(n, alg.SIZE[p])))
        worst = max(worst, _rel(alg.hodge_star(G, alg.hodge_star(G, a)).components, a.components))
    return worst <= 1e-12, f"max rel {worst:.1e}"


def check_sym_skw(rng, n=1000):
    G = random_metric(rng, n)
    eps = vf.VectorValuedForm(1, rng.normal(size=(n, 3, 3)))
    total = vf.sym(eps, G) + vf.skw(eps, G)
    err = _rel(total.components, eps.components)
    return err <= 1e-12, f"max rel {err:.1e}"


def check_interior_antiderivation(rng, n=1000):
    worst = 0.0
    v = rng.normal(size=(n, 3))
    for p in range(1, 4):
        for q in range(1, 4 - p):
            a = alg.PCovector(p, rng.normal(size=(n, alg.SIZE[p])))
            b = alg.PCovector(q, rng.normal(size=(n, alg.SIZE[q])))
            lhs = alg.interior_product(v, alg.wedge(a, b))
            rhs = alg.wedge(alg.interior_product(v, a), b) + alg.wedge(a, alg.interior_product(v, b)) * (-1) ** p
            worst = max(worst, _rel(lhs.components, rhs.components))
    return worst <= 1e-12, f"max rel {worst:.1e}"


# -- meshes and fields -----------------------------------------------------
def check_discrete_complex(rng, sizes=(1, 2, 4, 8)):
    worst = 0
    for n in sizes:
        mesh = generate_box_mesh(divisions=(n, n, n), jitter=0.2 if n > 1 else 0.0,
                                 seed=int(rng.integers(1 << 31)))
        worst = max(worst, abs(mesh.D1 @ mesh.D0).max(), abs(mesh.D2 @ mesh.D1).max())
    return worst == 0, f"max |D1D0|,|D2D1| = {worst} up to {max(sizes)}^3"


def check_covariant_derivative(rng, samples=3, points=20):
    worst = 0.0
    for _ in range(samples):
        for p in range(3):
            for q in range(3 - p):
                eta = random_polynomial_field("covector", p, rng)
                beta = random_polynomial_field("vector", q, rng)
                pts = rng.uniform(-1, 1, size=(points, 3))
                lhs = exterior_derivative_field(dot_wedge_field(eta, beta))(pts)
                rhs = (dot_wedge_field(covariant_exterior_derivative(eta), beta)(pts)
                       + (-1) ** p * dot_wedge_field(eta, covariant_exterior_derivative(beta))(pts))
                worst = max(worst, _rel(lhs, rhs))
            if p < 2:
                f = random_polynomial_field("vector", p, rng, max_degree=3)
                dd = covariant_exterior_derivative(covariant_exterior_derivative(f))
                worst = max(worst, float(np.max(np.abs(dd(rng.uniform(-1, 1, (points, 3)))))))
    return worst <= 1e-12, f"max rel {worst:.1e}"


# -- constitutive derivatives ----------------------------------------------
def _slope(hs, errs):
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def fd_order(energy, directional, x, dx, quadratic):
    """Observed order of the derivative check along ``dx``.

    ``energy(x)`` is scalar and ``directional`` the analytic derivative
    along ``dx``. Energies quadratic in ``x`` make central differences exact,
    so the order is read from the first-order Taylor remainder instead and
    central differences must match to roundoff.
    """
    hs = np.array(FD_STEPS)
    e0 = energy(x)
    scale = max(abs(directional), abs(e0), 1e-300)
    central = np.array([abs((energy(x + h * dx) - energy(x - h * dx)) / (2 * h) - directional) for h in hs])
    if quadratic:
        remainder = np.array([abs(energy(x + h * dx) - e0 - h * directional) for h in hs])
        return _slope(hs, remainder), float(central.max() / scale), remainder
    return _slope(hs, central), float(central.max() / scale), central


def derivative_cases(rng):
    """(name, energy, directional derivative, quadratic) tuples at random states."""
    G = random_metric(rng)
    mat = IsotropicElastic(*rng.uniform(0.5, 2.0, 2))
    r = float(rng.uniform(0.5, 2.0))
    eps0 = rng.normal(size=(3, 3)) * 0.05
    b0 = rng.normal(size=3)
    deps = rng.normal(size=(3, 3))
    db = rng.normal(size=3)
    cases = []
    for coupling in ("model_a", "model_b_linearized", "model_b"):
        model = MagnetoElasticEnergy(mat, r, coupling, G)
        quad = coupling == "model_a"

        def e_eps(E, model=model):
            return float(model.energy(vf.VectorValuedForm(1, E), alg.PCovector(2, b0)).components[0])

        def e_b(B, model=model):
            return float(model.energy(vf.VectorValuedForm(1, eps0), alg.PCovector(2, B)).components[0])

        sig = d1_energy(model, vf.VectorValuedForm(1, eps0), alg.PCovector(2, b0))
        h = d2_energy(model, vf.VectorValuedForm(1, eps0), alg.PCovector(2, b0))
        d_eps = float(vf.dot_wedge(sig, vf.VectorValuedForm(1, deps)).components[0])
        d_b = float(alg.wedge(h, alg.PCovector(2, db)).components[0])
        cases.append((f"{coupling} d1", e_eps, d_eps, eps0, deps, quad))
        cases.append((f"{coupling} d2", e_b, d_b, b0, db, True))
    return cases


def check_derivatives(rng):
    details, ok = [], True
    for name, energy, directional, x, dx, quad in derivative_cases(rng):
        order, central, _ = fd_order(energy, directional, x, dx, quad)
        good = abs(order - 2.0) <= 0.2 and (not quad or central <= 1e-8)
        ok &= good
        details.append(f"{name}:{order:.2f}")
    return ok, " ".join(details)


def check_antisymmetric_variation(rng, n=200):
    G = random_metric(rng, n)
    mat = IsotropicElastic(1.3, 0.7)
    model = MagnetoElasticEnergy(mat, 1.0, "model_a", G)
    eps = vf.VectorValuedForm(1, rng.normal(size=(n, 3, 3)))
    sigma = model.elastic_stress(eps) + maxwell_stress(np.ones(n), G, eps, alg.PCovector(2, rng.normal(size=(n, 3))))
    skew = vf.skw(vf.VectorValuedForm(1, rng.normal(size=(n, 3, 3))), G)
    val = vf.dot_wedge(sigma, skew).components
    scale = np.abs(sigma.components).max() * np.abs(skew.components).max()
    err = float(np.abs(val).max() / scale)
    return err <= 1e-12, f"max rel {err:.1e}"


# -- solvers ---------------------------------------------------------------
def check_rigid_invariance(rng, n=4):
    from .solvers.assembly import elastic_stiffness, rigid_modes
    mesh = generate_box_mesh(divisions=(n, n, n), jitter=0.2, seed=int(rng.integers(1 << 31)))
    G = alg.Metric.euclidean()
    K = elastic_stiffness(mesh, np.full(mesh.n_tets, 1.7), np.full(mesh.n_tets, 0.9), G, np.arange(mesh.n_tets))
    R = rigid_modes(mesh, np.arange(mesh.n_vertices))
    scale = abs(K).max() * np.abs(R).max()
    err = float(np.abs(K @ R).max() / scale)
    return err <= 1e-10, f"max |K r| / scale {err:.1e}"


def check_patch_test(rng, n=4):
    from .solvers import AffineField, ProblemSpec, SolverSettings, solve_elastic
    mesh = generate_box_mesh(divisions=(n, n, n), jitter=0.2, seed=int(rng.integers(1 << 31)))
    bc = AffineField(rng.normal(size=3) * 0.01, rng.normal(size=(3, 3)) * 0.01)
    mat = MagnetoElasticEnergy(IsotropicElastic(*rng.uniform(0.5, 3.0, 2)), 1.0, "none")
    # tight linear tolerance so the comparison sees discretisation error only
    rep = solve_elastic(ProblemSpec(mesh, {1: mat}, displacement_bc={t: bc for t in range(1, 7)},
                                    settings=SolverSettings(tol=1e-13)))
    err = _rel(rep.nu, bc(mesh.vertices))
    return err <= 1e-10, f"max rel {err:.1e}"


def check_uniform_b(rng, levels=(2, 4, 8)):
    from .solvers import solve_magnetostatic
    from .solvers.problems import uniform_b_problem
    worst = 0.0
    for n in levels:
        rep = solve_magnetostatic(uniform_b_problem(n, jitter=0.2, seed=int(rng.integers(1 << 31))))
        worst = max(worst, float(np.abs(rep.b.components - [1.0, 0.0, 0.0]).max()))
    return worst <= 1e-8, f"max |b - dx^dy| {worst:.1e} at {list(levels)}"


def check_slab_force(rng, n=8):
    from .solvers import magnetic_force_load, solve_coupled_model_a
    from .solvers.problems import slab_analytic_force, slab_problem, slab_top_indicator
    spec = slab_problem(n)
    rep = solve_coupled_model_a(spec)
    force = float(magnetic_force_load(spec, rep.magnetic_stress) @ slab_top_indicator(spec).ravel())
    exact = slab_analytic_force()
    err = abs(force - exact) / exact
    return err <= 0.02, f"force {force:.6f} vs {exact:.6f} (rel {err:.1e}) at {n}^3"


def check_model_b_vs_a(rng, n=16):
    from .solvers import solve_coupled_model_a, solve_coupled_model_b
    from .solvers.problems import slab_problem
    a = solve_coupled_model_a(slab_problem(n))
    b = solve_coupled_model_b(slab_problem(n, coupling="model_b_linearized"))
    err = stress_l2_difference(a, b)
    return err <= 0.05, f"rel L2 {err:.2e} at {n}^3"


def stress_l2_difference(report_a, report_b):
    """Relative L2 difference of total (elastic + magnetic) stress inside the body."""
    body = report_a.spec.body_mask
    vol = report_a.spec.mesh.volumes[body][:, None, None]
    ta = (report_a.sigma.components + report_a.magnetic_stress.components)[body]
    tb = (report_b.sigma.components + report_b.magnetic_stress.components)[body]
    return float(np.sqrt(np.sum(vol * (ta - tb) ** 2) / np.sum(vol * ta ** 2)))


def manufactured_study(levels=(8, 16, 32)):
    from .solvers import solve_elastic
    from .solvers.problems import l2_displacement_error, manufactured_problem
    errors = []
    for n in levels:
        spec, man = manufactured_problem(n)
        rep = solve_elastic(spec)
        errors.append(l2_displacement_error(spec.mesh, rep.nu, man.displacement))
    h = 1.0 / np.asarray(levels, dtype=float)
    orders = np.log(np.array(errors[:-1]) / errors[1:]) / np.log(h[:-1] / h[1:])
    return errors, orders


def check_manufactured(rng, levels=(8, 16, 32)):
    errors, orders = manufactured_study(levels)
    return bool(np.all(orders >= 1.8)), f"orders {np.round(orders, 3).tolist()} at {list(levels)}"


FAST = [
    ("isomorphism matrix", check_isomorphism),
    ("wedge anticommutativity", check_wedge_anticommutativity),
    ("dot-wedge anticommutativity", check_dot_wedge_anticommutativity),
    ("hodge pairing identity", check_hodge_pairing),
    ("double hodge star", check_double_star),
    ("sym + skw = id", check_sym_skw),
    ("interior antiderivation", check_interior_antiderivation),
    ("discrete complex", check_discrete_complex),
    ("covariant derivative identity", check_covariant_derivative),
    ("constitutive derivatives", check_derivatives),
    ("antisymmetric variation", check_antisymmetric_variation),
    ("rigid invariance", check_rigid_invariance),
    ("patch test", check_patch_test),
    ("uniform induction", check_uniform_b),
    ("slab force 8^3", check_slab_force),
]

FULL = FAST + [
    ("discrete complex 32^3", lambda rng: check_discrete_complex(rng, sizes=(16, 32))),
    ("slab force 16^3", lambda rng: check_slab_force(rng, 16)),
    ("model B linearized vs model A", check_model_b_vs_a),
    ("manufactured convergence", check_manufactured),
]


@contextlib.contextmanager
def tampered_wedge_sign():
    """Flip the sign of dx ^ dy in the shuffle table (mutation testing)."""
    table = alg.WEDGE_TABLES[1, 1]
    table[0, 1, 0] *= -1
    try:
        yield
    finally:
        table[0, 1, 0] *= -1


def run_checks(level="fast", seed=42, mutate=False):
    suite = FAST if level == "fast" else FULL
    results = []
    ctx = tampered_wedge_sign() if mutate else contextlib.nullcontext()
    with ctx:
        for name, fn in suite:
            rng = np.random.default_rng(seed)
            t0 = time.perf_counter()
            try:
                ok, detail = fn(rng)
            except Exception as exc:  # a crash counts as a failure
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results


def format_table(results):
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  time(s)  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.seconds:7.2f}  {r.detail}")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines)


__all__ = ["run_checks", "format_table", "CheckResult", "FAST", "FULL", "fd_order", "derivative_cases",
           "manufactured_study", "stress_l2_difference", "tampered_wedge_sign", "random_metric"]
