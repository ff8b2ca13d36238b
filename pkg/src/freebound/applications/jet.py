"""Two-fluid jet in a truncated vertical pipe, with bisection on the asymptote.

The pipe is ``[-1, 1] x [R-, R+]``.  The fluids are separated by the fixed
nozzle trace ``x = N(y)`` for ``y <= 0`` and by the free interface above the
junction ``(N(0), 0)``.  The side walls carry ``-inflow`` (left) and ``+1``
(right), the bottom carries ``g`` and the top is a homogeneous Neumann
boundary along which the interface endpoint slides.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..driver import FreeBoundaryProblem, RunResult, SolverConfig, run
from ..mesh import InterfaceCurve, Marker, Mesh, build_strip_mesh
from ..tracking import JumpCondition

log = logging.getLogger(__name__)


def jet_lambda(b: float, inflow: float, outer: float = 2.0) -> float:
    """Jump level ``(1/(1+b))^2 - (inflow/(outer-b))^2`` for asymptote ``x = b``."""
    if not -1.0 < b < 1.0:
        raise ValueError(f"b = {b} is outside (-1, 1)")
    return (1.0 / (1.0 + b)) ** 2 - (inflow / (outer - b)) ** 2


@dataclass(frozen=True)
class JetSpec:
    nozzle: Callable[[np.ndarray], np.ndarray]
    inflow: float
    bottom: Callable[[np.ndarray], np.ndarray]
    r_minus: float = -1.0
    r_plus: float = 2.0
    outer: float = 2.0
    nozzle_samples: int = 200

    def __post_init__(self):
        if not self.r_minus < 0.0 < self.r_plus:
            raise ValueError("need r_minus < 0 < r_plus")
        if not self.inflow > 0:
            raise ValueError("inflow must be positive")
        ys = np.linspace(self.r_minus, 0.0, self.nozzle_samples + 1)
        xs = np.asarray(self.nozzle(ys), float)
        if not np.all(np.abs(xs) < 1.0):
            raise ValueError("nozzle must stay inside (-1, 1)")

    @property
    def left_value(self) -> float:
        return -self.inflow

    @property
    def right_value(self) -> float:
        return 1.0

    @property
    def junction(self) -> tuple[float, float]:
        return float(np.asarray(self.nozzle(np.array([0.0])))[0]), 0.0

    def boundary_data(self, points) -> np.ndarray:
        p = np.asarray(points, float)
        out = np.zeros(len(p))
        eps = 1e-9
        bottom = p[:, 1] <= self.r_minus + eps
        out[bottom] = self.bottom(p[bottom, 0])
        out[p[:, 0] <= -1.0 + eps] = self.left_value
        out[p[:, 0] >= 1.0 - eps] = self.right_value
        return out

    def lam(self, b: float) -> float:
        return jet_lambda(b, self.inflow, self.outer)


def example_one_spec(r_minus: float = -1.0, r_plus: float = 2.0) -> JetSpec:
    """Straight nozzle ending at x = -0.5 on the bottom, inflow 5."""

    def nozzle(y):
        return 0.5 * np.abs(y) / r_minus

    def bottom(x):
        x = np.asarray(x, float)
        return np.where(x < -0.5, 10.0 * (x + 0.5), (x + 0.5) / 1.5)

    return JetSpec(nozzle, 5.0, bottom, r_minus, r_plus)


def example_two_spec(r_minus: float = -1.0, r_plus: float = 2.0) -> JetSpec:
    """Curved nozzle ``-0.5 (|y|/|R-|)^(1/4)``, inflow 1."""

    def nozzle(y):
        return -0.5 * (np.abs(y) / abs(r_minus)) ** 0.25

    def bottom(x):
        x = np.asarray(x, float)
        return np.where(x < -0.5, 2.0 * (x + 0.5), (x + 0.5) / 1.5)

    return JetSpec(nozzle, 1.0, bottom, r_minus, r_plus)


def symmetric_spec(r_minus: float = -1.0, r_plus: float = 2.0) -> JetSpec:
    """Odd data, vertical nozzle on x = 0 and equal fluxes: the mirror image
    of the solution for ``b`` is the solution for ``-b``."""

    def nozzle(y):
        return np.zeros_like(np.asarray(y, float))

    def bottom(x):
        return np.asarray(x, float)

    return JetSpec(nozzle, 1.0, bottom, r_minus, r_plus, outer=1.0)


def _markers(spec: JetSpec):
    def marker(points):
        p = np.asarray(points, float)
        eps = 1e-9
        out = np.full(len(p), Marker.NEUMANN, np.int8)
        g = spec.boundary_data(p)
        wall = (p[:, 1] <= spec.r_minus + eps) | (np.abs(p[:, 0]) >= 1.0 - eps)
        out[wall & (g > 0)] = Marker.SIGMA_PLUS
        out[wall & (g < 0)] = Marker.SIGMA_MINUS
        out[wall & (g == 0)] = Marker.GAMMA
        return out

    return marker


def jet_geometry(spec: JetSpec, h: float) -> tuple[Mesh, InterfaceCurve]:
    """Mesh whose interface is the nozzle trace followed by the vertical segment
    from the junction to the top; the nozzle part (y <= 0) is pinned."""
    ys = np.linspace(spec.r_minus, 0.0, spec.nozzle_samples + 1)
    nozzle = np.column_stack([np.asarray(spec.nozzle(ys), float), ys])
    x0 = nozzle[-1, 0]
    poly = np.vstack([nozzle, [(x0, spec.r_plus)]])

    def pinned(points):
        return np.asarray(points)[:, 1] <= 1e-12

    mesh, iface = build_strip_mesh(
        (-1.0, 1.0), (spec.r_minus, spec.r_plus), h, poly,
        boundary_marker=_markers(spec), fixed=pinned, breaks=(len(nozzle) - 1,),
    )
    return mesh, iface


def jet_problem(spec: JetSpec, b: float) -> FreeBoundaryProblem:
    return FreeBoundaryProblem(JumpCondition(1.0, 1.0, spec.lam(b)), spec.boundary_data, name=f"jet(b={b:.6g})")


@dataclass
class JetSolve:
    b: float
    f_top: float
    result: RunResult


def jet_solve_for_b(
    spec: JetSpec, b: float, h: float, config: SolverConfig | None = None, callback=None
) -> JetSolve:
    """Free interface for a given asymptote guess; ``f_top`` is its abscissa at y = R+."""
    problem = jet_problem(spec, b)
    mesh, iface = jet_geometry(spec, h)
    result = run(problem, mesh, iface, config or SolverConfig(), callback)
    if not result.converged:
        raise RuntimeError(f"jet run for b = {b} did not converge ({result.status})")
    top = iface.vertex_ids[-1]
    return JetSolve(b, float(result.mesh.vertices[top, 0]), result)


@dataclass
class BisectionResult:
    b_star: float
    f_star: float
    evaluations: list[tuple[float, float]] = field(default_factory=list)

    @property
    def residual(self) -> float:
        return self.f_star - self.b_star


def bisect_fixed_point(
    inner: Callable[[float], float],
    interval: tuple[float, float],
    b_tol: float = 1e-2,
    max_steps: int = 60,
) -> BisectionResult:
    """Bisection on ``F(b) = inner(b) - b`` until ``|F| <= b_tol``."""
    lo, hi = map(float, interval)
    if not lo < hi:
        raise ValueError("empty bisection interval")
    evals: list[tuple[float, float]] = []

    def F(b):
        f = float(inner(b))
        evals.append((b, f))
        log.info("bisection: b = %.8f  f(b) = %.8f", b, f)
        return f - b

    f_lo, f_hi = F(lo), F(hi)
    for b, r in ((lo, f_lo), (hi, f_hi)):
        if abs(r) <= b_tol:
            return BisectionResult(b, r + b, evals)
    if math.copysign(1.0, f_lo) == math.copysign(1.0, f_hi):
        raise ValueError(f"no sign change of f(b) - b on [{lo}, {hi}]: {f_lo:.4g}, {f_hi:.4g}")
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        r = F(mid)
        if abs(r) <= b_tol:
            return BisectionResult(mid, r + mid, evals)
        if math.copysign(1.0, r) == math.copysign(1.0, f_lo):
            lo, f_lo = mid, r
        else:
            hi = mid
    raise RuntimeError(f"bisection did not reach |f(b) - b| <= {b_tol} in {max_steps} steps")


def jet_bisection(
    spec: JetSpec,
    interval: tuple[float, float] = (-0.5, 0.5),
    b_tol: float = 1e-2,
    h: float = 0.1,
    config: SolverConfig | None = None,
    inner: Callable[[float], float] | None = None,
    callback=None,
) -> BisectionResult:
    """Asymptote ``b*`` with ``f_top(b*) = b*``.

    ``inner`` replaces the free-boundary solve (``b -> f_top``), e.g. for
    testing the root finder in isolation.  ``callback`` is handed to every
    inner run.
    """
    if inner is None:
        def inner(b):
            return jet_solve_for_b(spec, b, h, config, callback).f_top
    return bisect_fixed_point(inner, interval, b_tol)
