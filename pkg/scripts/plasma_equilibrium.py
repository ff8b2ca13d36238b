"""Plasma equilibrium on the unit disk or the cut domain, against the radial oracle."""
import argparse
import logging
import sys

import numpy as np

from freebound.driver import MotionRejectedError, SolverConfig
from freebound.applications.plasma import circularity, cut_domain_spec, disk_spec, plasma_run, radial_plasma_oracle


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--domain", choices=("disk", "cut"), default="disk")
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--max-iter", type=int, default=5000)
    ap.add_argument("--every", type=int, default=25, help="progress line stride")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    spec = disk_spec() if args.domain == "disk" else cut_domain_spec()
    oracle = radial_plasma_oracle(spec.gamma, spec.lam)
    print(f"radial oracle (unit disk, lambda={spec.lam}): R*={oracle.R_star:.5f} beta*={oracle.beta_star:.4f}")

    def progress(n, ev, rec):
        if n % args.every == 0:
            pts = ev.interface.points(ev.mesh)
            r = np.linalg.norm(pts - pts.mean(axis=0), axis=1)
            print(f"{n:5d} sigma={rec.sigma_inf:.3e} tau={rec.tau:.2e} beta={rec.beta:.4f} "
                  f"mean r={r.mean():.4f} circ={circularity(pts):.3f} min angle={rec.min_angle:.1f}")

    try:
        res = plasma_run(spec, args.h, SolverConfig(max_iterations=args.max_iter), progress)
    except MotionRejectedError as exc:
        print(f"aborted: {exc}")
        return 2
    print(f"{res.status} after {res.iterations} iterations: beta={res.beta:.4f} "
          f"circularity={circularity(res.interface.points(res.mesh)):.4f}")
    return 0 if res.converged else 2


if __name__ == "__main__":
    sys.exit(main())
