"""Acceptance suite: one printed PASS/FAIL line per criterion, at the stated tolerances."""
import time
from dataclasses import replace

import numpy as np
import pytest

from magelastic import verify
from magelastic.solvers import (magnetic_force_load, solve_coupled_model_a, solve_coupled_model_b,
                                solve_decoupled)
from magelastic.solvers.problems import slab_analytic_force, slab_problem, slab_top_indicator

SEED = 42


@pytest.fixture
def announce(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail
    return emit


def run_all(checks):
    details, ok = [], True
    for name, fn in checks:
        passed, detail = fn(np.random.default_rng(SEED))
        ok &= bool(passed)
        details.append(f"{name} {detail}")
    return ok, "; ".join(details)


def test_isomorphism_matrix(announce):
    ok, detail = verify.check_isomorphism(np.random.default_rng(SEED))
    announce(1, "diagonal +-1 isomorphism, exact round trip", ok, detail)


def test_algebraic_identities(announce):
    ok, detail = run_all([
        ("wedge", verify.check_wedge_anticommutativity),
        ("dot-wedge", verify.check_dot_wedge_anticommutativity),
        ("hodge pairing", verify.check_hodge_pairing),
        ("double star", verify.check_double_star),
        ("sym+skw", verify.check_sym_skw),
        ("antiderivation", verify.check_interior_antiderivation),
    ])
    announce(2, "algebraic identities on 1000 samples at 1e-12", ok, detail)


def test_discrete_complex(announce):
    ok, detail = verify.check_discrete_complex(np.random.default_rng(SEED), sizes=(1, 2, 3, 4, 8, 16, 32))
    announce(3, "D1 D0 = 0 and D2 D1 = 0 exactly", ok, detail)


def test_covariant_derivative(announce):
    ok, detail = verify.check_covariant_derivative(np.random.default_rng(SEED), samples=5)
    announce(4, "covariant derivative identity and d d = 0 at 1e-12", ok, detail)


def test_constitutive_derivatives(announce):
    ok, detail = verify.check_derivatives(np.random.default_rng(SEED))
    announce(5, "derivatives match central differences, order 2.0 +- 0.2", ok, detail)


def test_rigid_invariance(announce):
    ok, detail = run_all([("rigid modes", verify.check_rigid_invariance),
                          ("antisymmetric variation", verify.check_antisymmetric_variation)])
    announce(6, "rigid invariance and antisymmetric variations", ok, detail)


def test_patch(announce):
    ok, detail = verify.check_patch_test(np.random.default_rng(SEED))
    announce(7, "uniform strain reproduced on unstructured mesh at 1e-10", ok, detail)


def test_magnetostatic_exactness(announce):
    ok, detail = verify.check_uniform_b(np.random.default_rng(SEED), levels=(2, 4, 8, 16))
    announce(8, "a = x dy boundary data gives b = dx^dy", ok, detail)


@pytest.mark.slow
def test_manufactured_convergence(announce):
    start = time.perf_counter()
    errors, orders = verify.manufactured_study((8, 16, 32))
    seconds = time.perf_counter() - start
    ok = bool(np.all(orders >= 1.8)) and seconds <= 300
    detail = f"errors {[f'{e:.3e}' for e in errors]} orders {np.round(orders, 4).tolist()} in {seconds:.0f} s"
    announce(9, "manufactured elastic solution, L2 order >= 1.8", ok, detail)


@pytest.fixture(scope="module")
def slab16():
    spec = slab_problem(16)
    return spec, solve_coupled_model_a(spec)


@pytest.mark.slow
def test_coupled_consistency(announce, slab16):
    spec, model_a = slab16
    # (a) magnetic stress switched off reproduces independent single-physics solves
    loaded = replace(spec, body_force={2: (0.0, 0.0, -1.0)}, magnetic_forces=False)
    quiet = solve_coupled_model_a(loaded)
    plain = solve_decoupled(loaded.with_coupling("none"))
    tol = spec.settings.tol
    nu_err = np.abs(quiet.nu - plain.nu).max() / np.abs(plain.nu).max()
    b_err = np.abs(quiet.b.components - plain.b.components).max() / np.abs(plain.b.components).max()
    part_a = nu_err <= tol and b_err <= tol
    # (b) linearized model B against model A inside the slab
    model_b = solve_coupled_model_b(slab_problem(16, coupling="model_b_linearized"))
    diff = verify.stress_l2_difference(model_a, model_b)
    part_b = diff <= 0.05
    detail = f"S=0 vs decoupled: nu {nu_err:.1e}, b {b_err:.1e} (tol {tol:g}); model B lin vs A stress L2 {diff:.2e}"
    announce(10, "coupled consistency", part_a and part_b, detail)


@pytest.mark.slow
def test_interface_traction(announce, slab16):
    spec, rep = slab16
    force = float(magnetic_force_load(spec, rep.magnetic_stress) @ slab_top_indicator(spec).ravel())
    exact = slab_analytic_force()
    err = abs(force - exact) / exact
    announce(11, "slab interface force vs 1/2 [r] B^2 area within 2%", err <= 0.02,
             f"force {force:.6f} vs {exact:.6f}, rel {err:.1e}")
