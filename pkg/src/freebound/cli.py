"""Command-line entry point: ``freebound {bench,jet,plasma,run} ...``.

Exit codes: 0 converged, 2 not converged (iteration cap, rejected motion,
divergence, failed bisection), 1 usage or configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .driver import DivergenceError, InterfaceCollapseError, MotionRejectedError, RunResult, run
from .fem import SolverError
from .io import (
    ConfigError,
    RunConfig,
    format_config,
    read_config,
    state_fields,
    write_history,
    write_mesh,
    write_vtk,
)

log = logging.getLogger("freebound")

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--h", type=float, help="target mesh edge length")
    common.add_argument("--tol", type=float, help="stop when ||sigma||_inf falls below this")
    common.add_argument("--tau", type=float, help="use the fixed damping parameter tau")
    common.add_argument("--max-iter", type=int, dest="max_iter")
    common.add_argument("--out", help="output directory")
    common.add_argument("--sigma-form", choices=("lambda", "lambda2"), dest="sigma_form")
    common.add_argument("--snapshot-stride", type=int, dest="snapshot_stride")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="freebound", description="Free-boundary solver with damped interface motion.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    bench = sub.add_parser("bench", parents=[common], help="run a named benchmark")
    bench.add_argument("id", choices=("known_line", "heterogeneous_circle"))
    jet = sub.add_parser("jet", parents=[common], help="bisection for the jet asymptote")
    jet.add_argument("--example", choices=("one", "two", "symmetric"), default="one")
    jet.add_argument("--b-lo", type=float, dest="b_lo")
    jet.add_argument("--b-hi", type=float, dest="b_hi")
    jet.add_argument("--b-tol", type=float, dest="b_tol")
    plasma = sub.add_parser("plasma", parents=[common], help="plasma equilibrium")
    plasma.add_argument("--domain", choices=("disk", "cut"), default="disk")
    runp = sub.add_parser("run", parents=[common], help="execute a configuration file")
    runp.add_argument("config", type=Path)
    return parser


def resolve_config(args) -> RunConfig:
    cfg = read_config(args.config) if args.command == "run" else RunConfig()
    p, n, o = cfg.problem, cfg.numerics, cfg.output
    if args.command == "bench":
        p.kind, p.benchmark = "bench", args.id
    elif args.command == "jet":
        p.kind, p.jet_example = "jet", args.example
        for key in ("b_lo", "b_hi", "b_tol"):
            if getattr(args, key) is not None:
                setattr(p, key, getattr(args, key))
    elif args.command == "plasma":
        p.kind, p.plasma_domain = "plasma", args.domain
    if args.h is not None:
        n.h = args.h
    if args.tol is not None:
        n.epsilon_tol = args.tol
    if args.tau is not None:
        n.tau_policy, n.tau = "fixed", args.tau
    if args.max_iter is not None:
        n.max_iterations = args.max_iter
    if args.sigma_form is not None:
        n.sigma_form = args.sigma_form
    if args.out is not None:
        o.directory = args.out
    if args.snapshot_stride is not None:
        o.snapshot_stride = args.snapshot_stride
    return cfg.validate()


class Recorder:
    """Writes snapshots during a run and the final state afterwards."""

    def __init__(self, directory: Path, stride: int, interface):
        self.dir = directory
        self.stride = stride
        self.interface = interface

    def __call__(self, n, ev, record):
        if self.stride and n % self.stride == 0:
            snap = self.dir / "snapshots"
            snap.mkdir(exist_ok=True)
            write_mesh(snap / f"mesh_{n:06d}.txt", ev.mesh, self.interface)
            write_vtk(snap / f"state_{n:06d}.vtk", ev.mesh, state_fields(ev.mesh, self.interface, ev.u, ev.sigma))

    def finish(self, result: RunResult, extra: dict | None = None):
        write_history(self.dir / "history.csv", result.history)
        write_mesh(self.dir / "final_mesh.txt", result.mesh, result.interface)
        write_vtk(self.dir / "final.vtk", result.mesh, state_fields(result.mesh, result.interface, result.u, result.sigma))
        summary = {
            "status": result.status,
            "iterations": result.iterations,
            "sigma_inf": repr(result.sigma_inf),
        }
        if result.beta is not None:
            summary["beta"] = repr(result.beta)
        summary.update(extra or {})
        (self.dir / "summary.txt").write_text("".join(f"{k} = {v}\n" for k, v in summary.items()))


def _run_single(problem, mesh, iface, cfg: RunConfig, out: Path, extra=None) -> RunResult:
    rec = Recorder(out, cfg.output.snapshot_stride, iface)
    result = run(problem, mesh, iface, cfg.solver_config(), rec)
    rec.finish(result, extra)
    return result


def execute(cfg: RunConfig) -> int:
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(format_config(cfg))
    p, h = cfg.problem, cfg.numerics.h
    if p.kind == "bench":
        from .applications.benchmarks import BenchmarkSpec, benchmark_problem

        problem, mesh, iface = benchmark_problem(BenchmarkSpec(p.benchmark, h))
        result = _run_single(problem, mesh, iface, cfg, out)
        return EXIT_OK if result.converged else EXIT_NOT_CONVERGED
    if p.kind == "plasma":
        from .applications.plasma import circularity, cut_domain_spec, disk_spec, plasma_problem

        spec = disk_spec() if p.plasma_domain == "disk" else cut_domain_spec()
        problem, mesh, iface = plasma_problem(spec, h)
        result = _run_single(problem, mesh, iface, cfg, out)
        log.info("beta = %.6f, circularity = %.4f", result.beta, circularity(result.interface.points(result.mesh)))
        return EXIT_OK if result.converged else EXIT_NOT_CONVERGED
    from .applications.jet import (
        example_one_spec,
        example_two_spec,
        jet_bisection,
        jet_geometry,
        jet_problem,
        symmetric_spec,
    )

    make = {"one": example_one_spec, "two": example_two_spec, "symmetric": symmetric_spec}[p.jet_example]
    spec = make(p.r_minus, p.r_plus)
    bis = jet_bisection(spec, (p.b_lo, p.b_hi), p.b_tol, h, cfg.solver_config())
    rows = ["b,f_top"] + [f"{b:.17g},{f:.17g}" for b, f in bis.evaluations]
    (out / "bisection.csv").write_text("\n".join(rows) + "\n")
    mesh, iface = jet_geometry(spec, h)
    result = _run_single(jet_problem(spec, bis.b_star), mesh, iface, cfg, out,
                         {"b_star": repr(bis.b_star), "f_top": repr(bis.f_star),
                          "r_minus": repr(p.r_minus), "r_plus": repr(p.r_plus)})
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, OSError, ValueError) as exc:
        print(f"freebound: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        code = execute(cfg)
    except (MotionRejectedError, DivergenceError, InterfaceCollapseError) as exc:
        out = Path(cfg.output.directory)
        write_history(out / "history.csv", exc.history)
        (out / "summary.txt").write_text(f"status = failed\niterations = {len(exc.history)}\nerror = {exc}\n")
        print(f"freebound: run failed: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (SolverError, RuntimeError) as exc:
        print(f"freebound: run failed: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except ValueError as exc:
        print(f"freebound: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    print(f"freebound: {'converged' if code == EXIT_OK else 'not converged'}; output in {cfg.output.directory}")
    return code


if __name__ == "__main__":
    sys.exit(main())
