"""Magnetic pull on a high-contrast slab in a uniform induction (model A).

Prints the net normal force on the slab's top face against the analytic
plane-interface value 1/2 (r_air - r_slab) B^2 for several mesh sizes.
"""
import argparse

from magelastic.solvers import magnetic_force_load, solve_coupled_model_a
from magelastic.solvers.problems import slab_analytic_force, slab_problem, slab_top_indicator


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--levels", type=int, nargs="+", default=[8, 16])
    parser.add_argument("--r-slab", type=float, default=0.05)
    args = parser.parse_args()
    exact = slab_analytic_force(r_slab=args.r_slab)
    print(f"{'n':>4} {'force':>12} {'analytic':>12} {'rel err':>10} {'max |nu|':>10}")
    for n in args.levels:
        spec = slab_problem(n, r_slab=args.r_slab)
        rep = solve_coupled_model_a(spec)
        force = magnetic_force_load(spec, rep.magnetic_stress) @ slab_top_indicator(spec).ravel()
        print(f"{n:>4} {force:>12.6f} {exact:>12.6f} {abs(force - exact) / exact:>10.2e} {abs(rep.nu).max():>10.3e}")


if __name__ == "__main__":
    main()
