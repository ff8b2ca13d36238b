"""Bisection for the jet asymptote b* on one or more pipe truncations."""
import argparse
import sys

from freebound.driver import SolverConfig
from freebound.applications.jet import example_one_spec, example_two_spec, jet_bisection, symmetric_spec

SPECS = {"one": example_one_spec, "two": example_two_spec, "symmetric": symmetric_spec}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--example", choices=sorted(SPECS), default="one")
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--r-plus", type=float, nargs="+", default=[2.0])
    ap.add_argument("--r-minus", type=float, default=-1.0)
    ap.add_argument("--b-tol", type=float, default=1e-2)
    ap.add_argument("--interval", type=float, nargs=2, default=(-0.5, 0.5))
    args = ap.parse_args(argv)

    for r_plus in args.r_plus:
        spec = SPECS[args.example](args.r_minus, r_plus)
        try:
            res = jet_bisection(spec, tuple(args.interval), args.b_tol, args.h, SolverConfig())
        except (RuntimeError, ValueError) as exc:
            print(f"R+={r_plus}: failed ({exc})")
            continue
        steps = " ".join(f"({b:.4f},{f:.4f})" for b, f in res.evaluations)
        print(f"R+={r_plus}: b*={res.b_star:.5f} f={res.f_star:.5f} evaluations {steps}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
