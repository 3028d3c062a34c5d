"""Refinement study for a polynomial manufactured elastic solution."""
import argparse

import numpy as np

from magelastic.verify import manufactured_study


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--levels", type=int, nargs="+", default=[4, 8, 16, 32])
    args = parser.parse_args()
    errors, orders = manufactured_study(tuple(args.levels))
    print(f"{'n':>4} {'L2 error':>12} {'order':>7}")
    for k, (n, e) in enumerate(zip(args.levels, errors)):
        order = f"{orders[k - 1]:.3f}" if k else ""
        print(f"{n:>4} {e:>12.4e} {order:>7}")
    print(f"mean observed order {np.mean(orders):.3f}")


if __name__ == "__main__":
    main()
