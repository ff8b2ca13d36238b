"""Plasma equilibrium: harmonic vacuum region around an eigenfunction core."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from ..driver import FreeBoundaryProblem, RunResult, SolverConfig, run
from ..mesh import DiskCut, HalfPlaneCut, InterfaceCurve, Mesh, build_disk_mesh
from ..tracking import JumpCondition


def ellipse(center=(0.2, 0.2), semi_axes=(1.0 / 3.0, 0.5), n: int = 600) -> np.ndarray:
    th = 2 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + semi_axes[0] * np.cos(th), center[1] + semi_axes[1] * np.sin(th)])


@dataclass(frozen=True)
class PlasmaSpec:
    gamma: float = 1.0
    lam: float = 3.0
    cutouts: tuple = ()
    initial_interface: np.ndarray = field(default_factory=ellipse, compare=False)

    def __post_init__(self):
        if not (self.gamma > 0 and self.lam > 0):
            raise ValueError("gamma and lambda must be positive")


def disk_spec() -> PlasmaSpec:
    return PlasmaSpec(1.0, 3.0)


def cut_domain_spec() -> PlasmaSpec:
    """Unit disk minus the half plane y < -2/3 and the disk |x - (5/3, 0)| < 1."""
    cuts = (HalfPlaneCut((0.0, -2.0 / 3.0), (0.0, -1.0)), DiskCut((5.0 / 3.0, 0.0), 1.0))
    return PlasmaSpec(1.0, 4.0, cuts, ellipse((0.0, 0.0), (1.0 / 3.0, 1.0 / 3.0)))


def plasma_problem(spec: PlasmaSpec, h: float) -> tuple[FreeBoundaryProblem, Mesh, InterfaceCurve]:
    mesh, iface = build_disk_mesh((0.0, 0.0), 1.0, h, spec.initial_interface, spec.cutouts)
    jump = JumpCondition(1.0, 1.0, spec.lam)
    return FreeBoundaryProblem(jump, spec.gamma, eigen_minus=True, name="plasma"), mesh, iface


def plasma_run(spec: PlasmaSpec, h: float, config: SolverConfig | None = None, callback=None) -> RunResult:
    problem, mesh, iface = plasma_problem(spec, h)
    return run(problem, mesh, iface, config or SolverConfig(), callback)


def circularity(points) -> float:
    """(max - min) / mean of the distances to the centroid of the vertices."""
    p = np.asarray(points, float)
    r = np.linalg.norm(p - p.mean(axis=0), axis=1)
    return float((r.max() - r.min()) / r.mean())


# ---------------------------------------------------------------------------
# radially symmetric reference solution on the unit disk


@dataclass(frozen=True)
class RadialSolution:
    R_star: float
    beta_star: float
    beta_unit: float  # first Dirichlet eigenvalue of the unit disk (discrete)
    flux_unit: float  # v'(1) of the unit-disk eigenfunction
    mass_unit: float  # integral of v^2 over the unit disk


def radial_eigenpair(resolution: int):
    """Smallest eigenpair of ``-(r v')'/r = beta v`` on [0, 1], v(1) = 0.

    Linear elements in r with the weight r; returns ``(beta, v'(1), m)``
    where ``m`` is the integral of v^2 over the unit disk.
    """
    n = int(resolution)
    if n < 4:
        raise ValueError("resolution must be at least 4")
    r = np.linspace(0.0, 1.0, n + 1)
    dr = np.diff(r)
    ra, rb = r[:-1], r[1:]
    K = np.zeros((n + 1, n + 1))
    M = np.zeros((n + 1, n + 1))
    k = (ra + rb) / (2 * dr)
    for e in range(n):
        i, j = e, e + 1
        K[i, i] += k[e]
        K[j, j] += k[e]
        K[i, j] -= k[e]
        K[j, i] -= k[e]
        c = dr[e] / 12.0
        M[i, i] += c * (3 * ra[e] + rb[e])
        M[j, j] += c * (ra[e] + 3 * rb[e])
        M[i, j] += c * (ra[e] + rb[e])
        M[j, i] += c * (ra[e] + rb[e])
    w, vecs = scipy.linalg.eigh(K[:n, :n], M[:n, :n], subset_by_index=[0, 0])
    beta = float(w[0])
    v = np.zeros(n + 1)
    v[:n] = vecs[:, 0]
    if v[0] < 0:
        v = -v
    # boundary flux as the residual at the Dirichlet node
    flux = float((K @ v - beta * (M @ v))[n])
    mass = float(2 * np.pi * v @ (M @ v))
    return beta, flux, mass


def radial_jump(R, gamma, beta_unit, flux_unit, mass_unit):
    """(d_r u+)^2 - (d_r u-)^2 at radius R for the unit-mass core of radius R."""
    outer = gamma / (R * math.log(1.0 / R))
    inner2 = flux_unit**2 / (R**4 * mass_unit)
    return outer**2 - inner2


def radial_plasma_oracle(gamma: float = 1.0, lam: float = 3.0, resolution: int = 2000) -> RadialSolution:
    if not (gamma > 0 and lam > 0):
        raise ValueError("gamma and lambda must be positive")
    beta1, flux, mass = radial_eigenpair(resolution)

    def f(R):
        return radial_jump(R, gamma, beta1, flux, mass) - lam

    grid = np.linspace(1e-3, 1 - 1e-6, 4000)
    vals = np.array([f(R) for R in grid])
    change = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if not len(change):
        raise ValueError("radial jump equation has no root in (0, 1)")
    i = change[-1]
    R = scipy.optimize.brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-14)
    return RadialSolution(float(R), beta1 / R**2, beta1, flux, mass)
