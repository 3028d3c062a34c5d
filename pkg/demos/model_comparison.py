"""Model A (prescribed Maxwell stress) against model B (deformed-metric energy) on the slab.

Reports the relative L2 difference of the total stress inside the slab and
the displacement difference for both model B variants.
"""
import argparse

import numpy as np

from magelastic.solvers import solve_coupled_model_a, solve_coupled_model_b
from magelastic.solvers.problems import slab_problem
from magelastic.verify import stress_l2_difference


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("-n", type=int, default=16)
    args = parser.parse_args()
    model_a = solve_coupled_model_a(slab_problem(args.n))
    body = np.unique(model_a.spec.mesh.tets[model_a.spec.body_mask])
    print(f"model A: {model_a.iterations['outer']} outer iterations, max |nu| = {abs(model_a.nu).max():.4e}")
    for coupling in ("model_b_linearized", "model_b"):
        rep = solve_coupled_model_b(slab_problem(args.n, coupling=coupling))
        dnu = np.linalg.norm(rep.nu[body] - model_a.nu[body]) / np.linalg.norm(model_a.nu[body])
        print(f"{coupling:>20}: stress L2 diff {stress_l2_difference(model_a, rep):.3e}, "
              f"body displacement diff {dnu:.3e}, {rep.iterations['outer']} outer iterations")


if __name__ == "__main__":
    main()
