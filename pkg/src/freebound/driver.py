"""Outer free-boundary iteration.

One iteration solves the Dirichlet problem on each side of the current
interface (or the eigenproblem on the negative side), recovers both normal
fluxes, forms the jump residual sigma, and moves the interface by
``tau * sigma`` along its normal, carrying the mesh with it by harmonic
extension.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .fem import (
    assemble_mass,
    assemble_stiffness,
    dirichlet_split,
    solve_eigen_region,
    solve_with_operator,
)
from .flux import recover_side_flux
from .mesh import InterfaceCurve, Marker, Mesh, Region, interface_vertex_normals, signed_areas
from .motion import apply_displacement, harmonic_displacement, validate_motion
from .tracking import (
    JumpCondition,
    TauPolicy,
    advance_interface,
    compute_sigma,
    driven_mask,
    flux_weight,
    select_tau,
    sigma_sup,
)

log = logging.getLogger(__name__)

BoundaryData = Union[float, Callable[[np.ndarray], np.ndarray]]


class DivergenceError(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


class MotionRejectedError(RuntimeError):
    history: list = []


class InterfaceCollapseError(RuntimeError):
    history: list = []


@dataclass
class FreeBoundaryProblem:
    jump: JumpCondition
    boundary_data: BoundaryData
    eigen_minus: bool = False
    name: str = "problem"

    def boundary_values(self, points: np.ndarray) -> np.ndarray:
        if callable(self.boundary_data):
            return np.array(self.boundary_data(points), float)
        return np.full(len(points), float(self.boundary_data))


@dataclass
class SolverConfig:
    epsilon_tol: float = 1e-6
    tau_policy: TauPolicy = field(default_factory=TauPolicy)
    max_iterations: int = 5000
    flux_epsilon: float = 0.0
    sigma_form: str = "lambda"
    retry_limit: int = 10
    min_angle_floor: float = 5.0
    linear_tolerance: float = 1e-10
    eigen_tolerance: float = 1e-9
    stagnation_window: int = 50
    stagnation_rtol: float = 1e-12
    divergence_factor: float = 10.0
    keep_snapshots: bool = True

    def __post_init__(self):
        if not self.epsilon_tol > 0:
            raise ValueError("epsilon_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.flux_epsilon < 0:
            raise ValueError("flux_epsilon must be non-negative")
        if self.sigma_form not in ("lambda", "lambda2"):
            raise ValueError(f"unknown sigma form {self.sigma_form!r}")
        if self.retry_limit < 0:
            raise ValueError("retry_limit must be non-negative")


@dataclass
class IterationRecord:
    iteration: int
    sigma_inf: float
    tau: float
    min_angle: float
    beta: float | None = None
    interface_points: np.ndarray | None = None
    retries: int = 0


@dataclass
class Evaluation:
    """Fields, fluxes and jump residual on one configuration."""

    mesh: Mesh
    interface: InterfaceCurve
    u: np.ndarray
    u_plus: np.ndarray
    u_minus: np.ndarray
    alpha_plus: np.ndarray
    alpha_minus: np.ndarray
    sigma: np.ndarray
    sigma_inf: float
    driven: np.ndarray
    beta: float | None
    operators: dict


@dataclass
class StepResult:
    mesh: Mesh
    interface: InterfaceCurve
    evaluation: Evaluation
    record: IterationRecord


@dataclass
class RunResult:
    mesh: Mesh
    interface: InterfaceCurve
    evaluation: Evaluation
    history: list[IterationRecord]
    status: str

    @property
    def converged(self) -> bool:
        return self.status in ("converged", "stagnated")

    @property
    def u(self):
        return self.evaluation.u

    @property
    def sigma(self):
        return self.evaluation.sigma

    @property
    def sigma_inf(self) -> float:
        return self.evaluation.sigma_inf

    @property
    def beta(self):
        return self.evaluation.beta

    @property
    def iterations(self) -> int:
        return len(self.history)


def evaluate(
    problem: FreeBoundaryProblem,
    mesh: Mesh,
    interface: InterfaceCurve,
    config: SolverConfig,
    warm: Evaluation | None = None,
) -> Evaluation:
    """Subdomain solves, flux recovery and sigma on the current configuration."""
    jump = problem.jump
    tol = config.linear_tolerance
    data = problem.boundary_values(mesh.vertices)
    data[mesh.markers == Marker.GAMMA] = 0.0
    data[interface.vertex_ids] = 0.0
    Kp = assemble_stiffness(mesh, Region.OMEGA_PLUS, jump.a_plus)
    Km = assemble_stiffness(mesh, Region.OMEGA_MINUS, jump.a_minus)
    free, fixed = dirichlet_split(mesh, Region.OMEGA_PLUS)
    u_plus = solve_with_operator(Kp, free, fixed, data, tol, None if warm is None else warm.u_plus)
    beta = None
    source = None
    if problem.eigen_minus:
        eig, u_minus = solve_eigen_region(
            mesh, Region.OMEGA_MINUS, jump.a_minus, config.eigen_tolerance,
            x0=None if warm is None else warm.u_minus, K=Km,
        )
        beta = eig.beta
        source = beta * (assemble_mass(mesh, Region.OMEGA_MINUS) @ u_minus)
    else:
        free, fixed = dirichlet_split(mesh, Region.OMEGA_MINUS)
        u_minus = solve_with_operator(Km, free, fixed, data, tol, None if warm is None else warm.u_minus)
    u = np.zeros(mesh.n_vertices)
    pv = mesh.region_vertices(Region.OMEGA_PLUS)
    mv = mesh.region_vertices(Region.OMEGA_MINUS)
    u[pv] = u_plus[pv]
    u[mv] = u_minus[mv]
    eps = config.flux_epsilon
    alpha_plus = recover_side_flux(mesh, interface, u_plus, Region.OMEGA_PLUS, jump.a_plus, eps, K=Kp)
    # negative part -u >= 0 on the minus side
    alpha_minus = recover_side_flux(
        mesh, interface, -u_minus, Region.OMEGA_MINUS, jump.a_minus, eps, K=Km,
        source=None if source is None else -source,
    )
    sigma = compute_sigma(alpha_plus, alpha_minus, jump, interface.points(mesh), config.sigma_form)
    driven = driven_mask(mesh, interface)
    return Evaluation(
        mesh, interface, u, u_plus, u_minus, alpha_plus, alpha_minus, sigma,
        sigma_sup(sigma, driven), driven, beta,
        {Region.OMEGA_PLUS: Kp, Region.OMEGA_MINUS: Km},
    )


def advance(problem: FreeBoundaryProblem, ev: Evaluation, config: SolverConfig, iteration: int = 0):
    """Move interface and mesh from an evaluation; halve tau on rejected meshes."""
    mesh, interface = ev.mesh, ev.interface
    weight = None
    if problem.jump.form == "squared":
        weight = flux_weight(ev.alpha_plus, ev.alpha_minus, problem.jump, interface.points(mesh))
    tau = select_tau(ev.sigma, interface, mesh, config.tau_policy, ev.driven, weight)
    normals = interface_vertex_normals(mesh, interface)
    for attempt in range(config.retry_limit + 1):
        disp = advance_interface(mesh, interface, normals, ev.sigma, tau)
        omega = harmonic_displacement(
            mesh, interface, disp, problem.jump.a_plus, problem.jump.a_minus,
            operators=ev.operators, rel_tolerance=config.linear_tolerance,
        )
        new_mesh = apply_displacement(mesh, omega)
        check = validate_motion(mesh, new_mesh, config.min_angle_floor)
        if check.ok:
            break
        log.debug("iteration %d: motion rejected (min angle %.2f, inverted %s); halving tau",
                  iteration, check.min_angle, check.inverted)
        tau *= 0.5
    else:
        raise MotionRejectedError(
            f"mesh motion rejected {config.retry_limit + 1} times at iteration {iteration} "
            f"(worst triangle {check.worst_triangle}, min angle {check.min_angle:.2f})"
        )
    if interface.closed:
        pts = interface.points(new_mesh)
        enclosed = 0.5 * abs(np.dot(pts[:, 0], np.roll(pts[:, 1], -1)) - np.dot(pts[:, 1], np.roll(pts[:, 0], -1)))
        if enclosed < 10 * signed_areas(new_mesh.vertices, new_mesh.triangles).mean():
            raise InterfaceCollapseError(f"interface encloses area {enclosed:.3e} at iteration {iteration}")
    record = IterationRecord(
        iteration=iteration,
        sigma_inf=ev.sigma_inf,
        tau=tau,
        min_angle=check.min_angle,
        beta=ev.beta,
        interface_points=interface.points(mesh).copy() if config.keep_snapshots else None,
        retries=attempt,
    )
    return new_mesh, record


def step(problem: FreeBoundaryProblem, mesh: Mesh, interface: InterfaceCurve, config: SolverConfig,
         warm: Evaluation | None = None, iteration: int = 0) -> StepResult:
    """Exactly one outer iteration from the given configuration."""
    ev = evaluate(problem, mesh, interface, config, warm)
    new_mesh, record = advance(problem, ev, config, iteration)
    return StepResult(new_mesh, interface, ev, record)


def run(
    problem: FreeBoundaryProblem,
    mesh: Mesh,
    interface: InterfaceCurve,
    config: SolverConfig,
    callback: Callable[[int, Evaluation, IterationRecord], None] | None = None,
) -> RunResult:
    """Iterate until ``||sigma||_inf < epsilon_tol``, stagnation or the iteration cap."""
    history: list[IterationRecord] = []
    ev = evaluate(problem, mesh, interface, config)
    running_min = np.inf
    sup_seq: list[float] = []
    while True:
        s = ev.sigma_inf
        sup_seq.append(s)
        if s < config.epsilon_tol:
            status = "converged"
            break
        if len(history) >= config.max_iterations:
            status = "max_iterations"
            break
        running_min = min(running_min, s)
        if s > config.divergence_factor * running_min:
            raise DivergenceError(
                f"||sigma||_inf grew to {s:.3e} from a minimum of {running_min:.3e} "
                f"at iteration {len(history)}",
                history,
            )
        w = config.stagnation_window
        if len(sup_seq) > w and abs(sup_seq[-1] - sup_seq[-1 - w]) <= config.stagnation_rtol * sup_seq[-1 - w]:
            status = "stagnated"
            break
        try:
            mesh, record = advance(problem, ev, config, len(history))
        except (MotionRejectedError, InterfaceCollapseError) as exc:
            exc.history = history
            raise
        history.append(record)
        if callback is not None:
            callback(len(history), ev, record)
        ev = evaluate(problem, mesh, interface, config, warm=ev)
    log.info("%s: %s after %d iterations, ||sigma||_inf = %.3e", problem.name, status, len(history), ev.sigma_inf)
    return RunResult(mesh, interface, ev, history, status)
