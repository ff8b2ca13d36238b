"""Jump residual on the interface and the damped normal displacement."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .fem import Coefficient, evaluate_coefficient
from .mesh import InterfaceCurve, Marker, Mesh

FREE, PINNED, SLIDE = 0, 1, 2

JumpLevel = Union[float, Callable[[np.ndarray], np.ndarray]]


def _check_monotone(f, name):
    s = np.linspace(-50.0, 50.0, 1001)
    v = np.asarray(f(s), float)
    if v.shape != s.shape or not np.all(np.diff(v) >= 0):
        raise ValueError(f"{name} must be a monotone increasing function")


@dataclass(frozen=True)
class JumpCondition:
    """``a+ (d u+)^2 - a- (d u-)^2 = lam`` or ``phi(d u+) - psi(d u-) = lam``.

    ``d u+`` and ``d u-`` are outward normal derivatives of the positive and
    negative parts (both non-positive on a regular interface).
    """

    a_plus: Coefficient = 1.0
    a_minus: Coefficient = 1.0
    lam: JumpLevel = 0.0
    phi: Callable | None = None
    psi: Callable | None = None

    def __post_init__(self):
        for name in ("a_plus", "a_minus"):
            a = getattr(self, name)
            if not callable(a) and not float(a) > 0:
                raise ValueError(f"{name} must be positive")
        if (self.phi is None) != (self.psi is None):
            raise ValueError("generalized form needs both phi and psi")
        if self.phi is not None:
            _check_monotone(self.phi, "phi")
            _check_monotone(self.psi, "psi")

    @property
    def form(self) -> str:
        return "squared" if self.phi is None else "generalized"

    def level(self, points: np.ndarray) -> np.ndarray:
        if callable(self.lam):
            return np.broadcast_to(np.asarray(self.lam(points), float), (len(points),)).astype(float)
        return np.full(len(points), float(self.lam))


def compute_sigma(alpha_plus, alpha_minus, jump: JumpCondition, points, sigma_form: str = "lambda") -> np.ndarray:
    """Jump residual at each interface vertex.

    ``sigma_form="lambda2"`` subtracts the squared jump level instead.
    """
    ap = np.asarray(alpha_plus, float)
    am = np.asarray(alpha_minus, float)
    points = np.asarray(points, float).reshape(-1, 2)
    if ap.shape != am.shape or ap.shape != (len(points),):
        raise ValueError("flux traces and interface points differ in length")
    lam = jump.level(points)
    if sigma_form == "lambda2":
        lam = lam**2
    elif sigma_form != "lambda":
        raise ValueError(f"unknown sigma form {sigma_form!r}")
    if jump.phi is not None:
        return np.asarray(jump.phi(ap), float) - np.asarray(jump.psi(am), float) - lam
    a1 = evaluate_coefficient(jump.a_plus, points)
    a2 = evaluate_coefficient(jump.a_minus, points)
    return a1 * ap**2 - a2 * am**2 - lam


def vertex_constraints(mesh: Mesh, interface: InterfaceCurve):
    """Per-vertex motion mode (FREE, PINNED, SLIDE) and slide tangents.

    Open endpoints are pinned on Dirichlet boundary and slide along the
    boundary line when a neighbouring boundary vertex is NEUMANN.
    """
    n = len(interface)
    modes = np.where(interface.fixed, PINNED, FREE)
    tangents = np.zeros((n, 2))
    if interface.closed:
        return modes, tangents
    bedges = mesh.boundary_edges
    for k in (0, n - 1):
        if interface.fixed[k]:
            continue
        vid = interface.vertex_ids[k]
        rows = bedges[(bedges == vid).any(axis=1)]
        nbrs = rows[rows != vid]
        if len(nbrs) == 2 and (mesh.markers[nbrs] == Marker.NEUMANN).any():
            t = mesh.vertices[nbrs[1]] - mesh.vertices[nbrs[0]]
            modes[k] = SLIDE
            tangents[k] = t / np.linalg.norm(t)
        else:
            modes[k] = PINNED
    return modes, tangents


def driven_mask(mesh: Mesh, interface: InterfaceCurve) -> np.ndarray:
    modes, _ = vertex_constraints(mesh, interface)
    return modes != PINNED


def sigma_sup(sigma, driven=None) -> float:
    s = np.abs(np.asarray(sigma, float))
    if driven is not None:
        s = s[driven]
    return float(s.max()) if s.size else 0.0


@dataclass(frozen=True)
class TauPolicy:
    """``fixed``: constant tau.  ``capped``: largest tau (up to ``tau_max``)
    keeping the largest displacement below ``cap_fraction`` times the
    shortest interface edge.

    When flux traces are available the capped rule also enforces
    ``tau <= stability_fraction * l_min / max(a+ (d u+)^2 + a- (d u-)^2)``,
    which bounds the growth of saw-tooth interface modes.
    """

    kind: str = "capped"
    tau: float = 1e-4
    cap_fraction: float = 0.2
    tau_max: float = 1.0
    stability_fraction: float | None = 0.1

    def __post_init__(self):
        if self.kind not in ("fixed", "capped"):
            raise ValueError(f"unknown tau policy {self.kind!r}")
        if self.kind == "fixed" and not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.kind == "capped" and not (self.cap_fraction > 0 and self.tau_max > 0):
            raise ValueError("cap_fraction and tau_max must be positive")

    @classmethod
    def fixed(cls, tau: float) -> "TauPolicy":
        return cls("fixed", tau=tau)

    @classmethod
    def capped(cls, cap_fraction: float = 0.2, tau_max: float = 1.0, stability_fraction: float | None = 0.1) -> "TauPolicy":
        return cls("capped", cap_fraction=cap_fraction, tau_max=tau_max, stability_fraction=stability_fraction)


def min_interface_edge(mesh: Mesh, interface: InterfaceCurve) -> float:
    segs = interface.segments
    return float(np.linalg.norm(mesh.vertices[segs[:, 1]] - mesh.vertices[segs[:, 0]], axis=1).min())


def flux_weight(alpha_plus, alpha_minus, jump: JumpCondition, points) -> np.ndarray:
    """``a+ (d u+)^2 + a- (d u-)^2`` at each vertex (squared form only)."""
    a1 = evaluate_coefficient(jump.a_plus, points)
    a2 = evaluate_coefficient(jump.a_minus, points)
    return a1 * np.asarray(alpha_plus) ** 2 + a2 * np.asarray(alpha_minus) ** 2


def select_tau(
    sigma,
    interface: InterfaceCurve,
    mesh: Mesh,
    policy: TauPolicy,
    driven=None,
    weight=None,
) -> float:
    """Damping parameter for the next interface move.

    ``weight`` (optional) is :func:`flux_weight` at the interface vertices.
    """
    if policy.kind == "fixed":
        return policy.tau
    ell = min_interface_edge(mesh, interface)
    tau = policy.tau_max
    s = sigma_sup(sigma, driven)
    if s > 0.0:
        tau = min(tau, policy.cap_fraction * ell / s)
    if weight is not None and policy.stability_fraction:
        w = sigma_sup(weight, driven)
        if w > 0.0:
            tau = min(tau, policy.stability_fraction * ell / w)
    return tau


def advance_interface(
    mesh: Mesh,
    interface: InterfaceCurve,
    normals,
    sigma,
    tau: float,
    max_displacement: float | None = None,
) -> np.ndarray:
    """Displacement ``tau * sigma_i * eta_i`` of every interface vertex.

    Pinned vertices stay put; sliding endpoints keep only the component
    along their boundary line.
    """
    normals = np.asarray(normals, float)
    sigma = np.asarray(sigma, float)
    disp = (tau * sigma)[:, None] * normals
    modes, tangents = vertex_constraints(mesh, interface)
    disp[modes == PINNED] = 0.0
    slide = modes == SLIDE
    if slide.any():
        t = tangents[slide]
        disp[slide] = np.einsum("ij,ij->i", disp[slide], t)[:, None] * t
    if max_displacement is not None:
        worst = float(np.linalg.norm(disp, axis=1).max())
        if worst > max_displacement * (1 + 1e-12):
            raise ValueError(f"interface displacement {worst:.3e} exceeds cap {max_displacement:.3e}")
    return disp
