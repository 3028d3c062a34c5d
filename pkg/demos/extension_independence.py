"""Does the model B body displacement depend on how it is extended into the air?

Solves the slab problem with two different air-extension operators (plain
and graded Laplace) and reports the difference on the body. Nothing is
asserted: the outcome is an empirical observation.
"""
import argparse
from dataclasses import replace

import numpy as np

from magelastic.solvers import SolverSettings, solve_coupled_model_b
from magelastic.solvers.problems import slab_problem


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--levels", type=int, nargs="+", default=[8, 16])
    parser.add_argument("--coupling", default="model_b_linearized", choices=["model_b", "model_b_linearized"])
    args = parser.parse_args()
    print(f"{'n':>4} {'body nu diff':>14} {'air nu diff':>12}")
    for n in args.levels:
        spec = slab_problem(n, coupling=args.coupling)
        plain = solve_coupled_model_b(spec)
        graded = solve_coupled_model_b(replace(spec, settings=SolverSettings(extension="graded_laplace")))
        ext = plain.systems["extension"]
        rel = [np.linalg.norm(plain.nu[idx] - graded.nu[idx]) / np.linalg.norm(plain.nu[idx])
               for idx in (ext.body, ext.air)]
        print(f"{n:>4} {rel[0]:>14.3e} {rel[1]:>12.3e}")


if __name__ == "__main__":
    main()
