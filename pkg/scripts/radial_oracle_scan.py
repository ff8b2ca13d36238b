"""Radius and eigenvalue of the radially symmetric plasma over a range of jump levels."""
import argparse
import sys

import numpy as np

from freebound.applications.plasma import radial_plasma_oracle


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--lam", type=float, nargs=3, default=(1.0, 10.0, 10), metavar=("LO", "HI", "N"))
    ap.add_argument("--resolution", type=int, default=2000)
    args = ap.parse_args(argv)
    print("lambda      R*        beta*")
    for lam in np.linspace(args.lam[0], args.lam[1], int(args.lam[2])):
        sol = radial_plasma_oracle(args.gamma, lam, args.resolution)
        print(f"{lam:8.3f}  {sol.R_star:.6f}  {sol.beta_star:.5f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
