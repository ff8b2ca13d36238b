"""Known-interface benchmark on a sequence of meshes.

Prints iterations, final ||sigma||_inf, interface deviation from x = 0.5,
error norms and the log-linear decay fit of the running minimum of sigma.
"""
import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from freebound.driver import SolverConfig, run
from freebound.tracking import TauPolicy
from freebound.applications.benchmarks import BenchmarkSpec, benchmark_problem, known_line_errors


def decay_fit(values):
    y = np.log(np.minimum.accumulate(values))
    n = np.arange(len(y))
    slope, icept = np.polyfit(n, y, 1)
    res = y - slope * n - icept
    return slope, 1 - res @ res / ((y - y.mean()) @ (y - y.mean()))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--tau", type=float, help="fixed tau instead of the capped policy")
    ap.add_argument("--csv", type=Path)
    args = ap.parse_args(argv)

    policy = TauPolicy.fixed(args.tau) if args.tau else TauPolicy.capped()
    rows = []
    for h in args.h:
        problem, mesh, iface = benchmark_problem(BenchmarkSpec("known_line", h))
        res = run(problem, mesh, iface, SolverConfig(epsilon_tol=args.tol, tau_policy=policy, max_iterations=20000))
        dev = float(np.abs(res.interface.points(res.mesh)[:, 0] - 0.5).max())
        h1, sup = known_line_errors(res.mesh, res.u)
        slope, r2 = decay_fit([r.sigma_inf for r in res.history[:2000]] + [res.sigma_inf])
        rows.append(dict(h=h, status=res.status, iterations=res.iterations, sigma_inf=res.sigma_inf,
                         deviation=dev, h1_error=h1, sup_error=sup, decay_slope=slope, decay_r2=r2))
        print(f"h={h:<6} {res.status:<10} it={res.iterations:<5} sigma={res.sigma_inf:.2e} "
              f"dev={dev:.2e} H1={h1:.3e} sup={sup:.3e} slope={slope:.3e} R2={r2:.3f}")
    if args.csv:
        with args.csv.open("w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
