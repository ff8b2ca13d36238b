"""Benchmark configurations with a known or symmetric free boundary."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..driver import FreeBoundaryProblem
from ..fem import p1_gradients
from ..mesh import InterfaceCurve, Marker, Mesh, build_disk_mesh, build_strip_mesh
from ..tracking import JumpCondition

BENCHMARKS = ("known_line", "heterogeneous_circle")

#: jump level for which the piecewise-linear profile is an exact solution
KNOWN_LINE_LAMBDA = -3.0


@dataclass(frozen=True)
class BenchmarkSpec:
    id: str = "known_line"
    h: float = 0.05
    initial_interface: np.ndarray | None = None

    def __post_init__(self):
        if self.id not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.id!r}; expected one of {BENCHMARKS}")
        if not self.h > 0:
            raise ValueError("h must be positive")


def known_line_data(points):
    x = np.asarray(points, float)[:, 0] - 0.5
    return 2.0 * np.minimum(x, 0.0) + np.maximum(x, 0.0)


def sine_interface(n: int = 400) -> np.ndarray:
    y = np.linspace(0.0, 1.0, n + 1)
    return np.column_stack([0.5 + 0.1 * np.sin(2 * np.pi * y), y])


def _sign_markers(g):
    def marker(points):
        v = g(points)
        out = np.full(len(points), Marker.GAMMA, np.int8)
        out[v > 0] = Marker.SIGMA_PLUS
        out[v < 0] = Marker.SIGMA_MINUS
        return out

    return marker


def _upper(points):
    return np.asarray(points)[:, 1] >= 0.0


def hetero_a_plus(points):
    return np.where(_upper(points), 100.0, 1.0)


def hetero_a_minus(points):
    return np.where(_upper(points), 1.0, 100.0)


def benchmark_problem(spec: BenchmarkSpec) -> tuple[FreeBoundaryProblem, Mesh, InterfaceCurve]:
    if spec.id == "known_line":
        poly = sine_interface() if spec.initial_interface is None else spec.initial_interface
        mesh, iface = build_strip_mesh(
            (0.0, 1.0), (0.0, 1.0), spec.h, poly, boundary_marker=_sign_markers(known_line_data)
        )
        jump = JumpCondition(1.0, 1.0, KNOWN_LINE_LAMBDA)
        return FreeBoundaryProblem(jump, known_line_data, name="known_line"), mesh, iface

    def g(points):
        return np.asarray(points, float)[:, 0]

    poly = np.array([(0.0, -1.0), (0.0, 1.0)]) if spec.initial_interface is None else spec.initial_interface
    mesh, iface = build_disk_mesh(
        (0.0, 0.0), 1.0, spec.h, poly, boundary_marker=_sign_markers(g), closed=False
    )
    jump = JumpCondition(hetero_a_plus, hetero_a_minus, -1.0)
    return FreeBoundaryProblem(jump, g, name="heterogeneous_circle"), mesh, iface


# ---------------------------------------------------------------------------
# errors against the known-line solution


def _clip_left(poly: np.ndarray, x0: float) -> np.ndarray:
    """Part of a convex polygon with x <= x0 (Sutherland-Hodgman, one edge)."""
    out = []
    n = len(poly)
    for k in range(n):
        p, q = poly[k], poly[(k + 1) % n]
        pin, qin = p[0] <= x0, q[0] <= x0
        if pin:
            out.append(p)
        if pin != qin:
            s = (x0 - p[0]) / (q[0] - p[0])
            out.append(p + s * (q - p))
    return np.array(out) if out else np.zeros((0, 2))


def _polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def known_line_errors(mesh: Mesh, u) -> tuple[float, float]:
    """(H1 seminorm, nodal sup norm) of ``u`` minus the exact profile.

    The exact gradient jumps at x = 0.5, so every triangle is split there
    and each part integrated against its own constant gradient.
    """
    u = np.asarray(u, float)
    area, grads = p1_gradients(mesh.vertices, mesh.triangles)
    gh = np.einsum("tkd,tk->td", grads, u[mesh.triangles])
    total = 0.0
    for t, tri in enumerate(mesh.triangles):
        left = _polygon_area(_clip_left(mesh.vertices[tri], 0.5))
        right = area[t] - left
        el = (gh[t, 0] - 2.0) ** 2 + gh[t, 1] ** 2
        er = (gh[t, 0] - 1.0) ** 2 + gh[t, 1] ** 2
        total += left * el + max(right, 0.0) * er
    sup = float(np.abs(u - known_line_data(mesh.vertices)).max())
    return float(np.sqrt(total)), sup

