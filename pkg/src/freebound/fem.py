"""P1 assembly, Dirichlet subdomain solves, PCG and inverse iteration."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from .mesh import DIRICHLET_MARKERS, Mesh, signed_areas

Coefficient = Union[float, Callable[[np.ndarray], np.ndarray]]


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SingularSystemError(SolverError):
    pass


def evaluate_coefficient(coefficient: Coefficient, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, float).reshape(-1, 2)
    if callable(coefficient):
        vals = np.asarray(coefficient(points), float)
        return np.broadcast_to(vals, (len(points),)).astype(float)
    return np.full(len(points), float(coefficient))


def piecewise_coefficient(predicate: Callable[[np.ndarray], np.ndarray], inside: float, outside: float):
    """Coefficient equal to ``inside`` where ``predicate(points)`` holds."""

    def a(points):
        return np.where(predicate(points), inside, outside)

    return a


def p1_gradients(vertices: np.ndarray, triangles: np.ndarray):
    """Signed areas and basis gradients, shape (NT, 3, 2)."""
    p = vertices[triangles]
    area = signed_areas(vertices, triangles)
    # grad phi_k = perp(x_{k+2} - x_{k+1}) / (2 area)
    grads = np.empty((len(triangles), 3, 2))
    for k in range(3):
        e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        grads[:, k, 0] = -e[:, 1]
        grads[:, k, 1] = e[:, 0]
    grads /= (2.0 * area)[:, None, None]
    return area, grads


def _select(mesh: Mesh, region):
    if region is None:
        return mesh.triangles
    tris = mesh.triangles[mesh.regions == region]
    if not len(tris):
        raise SolverError(f"region {region} has no triangles")
    return tris


def _scatter(n, tris, local):
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def assemble_stiffness(mesh: Mesh, region=None, coefficient: Coefficient = 1.0) -> sp.csr_matrix:
    """Neumann P1 stiffness over one region (global numbering, NV x NV)."""
    tris = _select(mesh, region)
    area, grads = p1_gradients(mesh.vertices, tris)
    centroids = mesh.vertices[tris].mean(axis=1)
    a = evaluate_coefficient(coefficient, centroids)
    if (a <= 0).any() or not np.isfinite(a).all():
        raise SolverError("coefficient must be positive at every centroid")
    local = np.einsum("tid,tjd->tij", grads, grads) * (a * area)[:, None, None]
    return _scatter(mesh.n_vertices, tris, local)


_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def assemble_mass(mesh: Mesh, region=None) -> sp.csr_matrix:
    tris = _select(mesh, region)
    area = signed_areas(mesh.vertices, tris)
    local = area[:, None, None] * _MASS_REF[None]
    return _scatter(mesh.n_vertices, tris, local)


def cg_solve(A, b, rel_tolerance: float = 1e-10, max_iterations: int | None = None, x0=None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradients for SPD ``A``.

    Stops when ``||b - A x|| <= rel_tolerance * ||b||``.  Raises
    :class:`ConvergenceError` at the iteration cap or on breakdown
    (non-positive curvature, i.e. an indefinite operator).
    """
    b = np.asarray(b, float)
    n = len(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    if max_iterations is None:
        max_iterations = max(10 * n, 100)
    diag = A.diagonal() if sp.issparse(A) else np.diag(A)
    if (diag <= 0).any():
        raise ConvergenceError("non-positive diagonal: operator is not SPD", residual=np.inf, iterations=0)
    dinv = 1.0 / diag
    # work with b / ||b|| so tiny data cannot underflow the curvature p.Ap
    b = b / bnorm
    x = np.zeros(n) if x0 is None else np.array(x0, float) / bnorm
    r = b - A @ x
    target = rel_tolerance
    rnorm = np.linalg.norm(r)
    if rnorm <= target:
        return x * bnorm
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iterations + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise ConvergenceError("CG breakdown: non-positive curvature", residual=rnorm, iterations=it)
        step = rz / pAp
        x += step * p
        r -= step * Ap
        rnorm = np.linalg.norm(r)
        if rnorm <= target:
            return x * bnorm
        z = dinv * r
        rz_new = r @ z
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise ConvergenceError(
        f"CG did not converge in {max_iterations} iterations (relative residual {rnorm:.3e})",
        residual=rnorm,
        iterations=max_iterations,
    )


def dirichlet_split(mesh: Mesh, region=None):
    """(free, fixed) vertex ids of a region.

    Vertices marked SIGMA_PLUS, SIGMA_MINUS or GAMMA are fixed; INTERIOR and
    NEUMANN vertices are unknowns.
    """
    verts = mesh.region_vertices(region)
    is_dir = np.isin(mesh.markers[verts], DIRICHLET_MARKERS)
    return verts[~is_dir], verts[is_dir]


def solve_with_operator(K, free, fixed, values, rel_tolerance=1e-10, x0=None) -> np.ndarray:
    """Solve ``K u = 0`` on ``free`` rows with ``u[fixed] = values[fixed]``.

    Returns a full-length vector; entries outside ``free`` and ``fixed`` are 0.
    """
    if not len(fixed):
        raise SingularSystemError("no Dirichlet vertex in region")
    u = np.zeros(K.shape[0])
    u[fixed] = values[fixed]
    if len(free):
        Kff = K[free][:, free]
        rhs = -(K[free][:, fixed] @ u[fixed])
        guess = None if x0 is None else np.asarray(x0)[free]
        u[free] = cg_solve(Kff, rhs, rel_tolerance, x0=guess)
    return u


def solve_dirichlet(mesh: Mesh, region, coefficient: Coefficient, dirichlet_values, rel_tolerance=1e-10, x0=None):
    """Discrete a-harmonic function on ``region`` with the given Dirichlet data.

    ``dirichlet_values`` is a full-length array or a callable of points; only
    its values at Dirichlet-marked vertices of the region are used.
    """
    if callable(dirichlet_values):
        vals = np.asarray(dirichlet_values(mesh.vertices), float)
    else:
        vals = np.asarray(dirichlet_values, float)
    if vals.shape != (mesh.n_vertices,):
        raise SolverError("dirichlet_values must have one entry per vertex")
    K = assemble_stiffness(mesh, region, coefficient)
    free, fixed = dirichlet_split(mesh, region)
    return solve_with_operator(K, free, fixed, vals, rel_tolerance, x0)


@dataclass
class EigenResult:
    beta: float
    vector: np.ndarray
    iterations: int
    residual: float
    near_degenerate: bool = False


def smallest_generalized_eig(
    K,
    M,
    rel_tolerance: float = 1e-8,
    max_iterations: int = 500,
    x0=None,
    inner_tolerance: float | None = None,
) -> EigenResult:
    """Smallest eigenpair of ``K u = beta M u`` by inverse iteration.

    ``K`` and ``M`` are the Dirichlet-eliminated (SPD) matrices.  The vector
    is M-normalised (``u^T M u = 1``) and sign-fixed so that ``sum(M u) < 0``.
    """
    n = K.shape[0]
    inner = inner_tolerance if inner_tolerance is not None else min(1e-12, 1e-3 * rel_tolerance)
    x = np.ones(n) if x0 is None else np.array(x0, float)
    if not np.any(x):
        x = np.ones(n)
    x /= np.sqrt(x @ (M @ x))
    Kx = K @ x
    beta = x @ Kx
    ratios = []
    prev_res = None
    res = np.inf
    for it in range(1, max_iterations + 1):
        res = np.linalg.norm(Kx - beta * (M @ x)) / np.linalg.norm(Kx)
        if res <= rel_tolerance:
            break
        if prev_res is not None and prev_res > 0:
            ratios.append(res / prev_res)
        prev_res = res
        y = cg_solve(K, M @ x, inner, x0=x / beta)
        x = y / np.sqrt(y @ (M @ y))
        Kx = K @ x
        beta = x @ Kx
    else:
        raise ConvergenceError(f"inverse iteration did not converge (residual {res:.3e})", residual=res, iterations=max_iterations)
    if (M @ x).sum() > 0:
        x = -x
    # residual contraction per step estimates beta_1 / beta_2
    near = bool(len(ratios) >= 3 and np.median(ratios[-3:]) > 1.0 - 1e-8)
    if near:
        warnings.warn("smallest eigenvalue is nearly degenerate", RuntimeWarning, stacklevel=2)
    return EigenResult(float(beta), x, it, float(res), near)


def solve_eigen_region(mesh: Mesh, region, coefficient: Coefficient = 1.0, rel_tolerance=1e-8, x0=None, K=None):
    """Dirichlet eigenpair of ``-div(a grad u) = beta u`` on a region, u = 0 on its boundary.

    Returns ``(EigenResult, u)`` with ``u`` the full-length field (zero off
    the free vertices of the region).
    """
    if K is None:
        K = assemble_stiffness(mesh, region, coefficient)
    M = assemble_mass(mesh, region)
    free, _ = dirichlet_split(mesh, region)
    if not len(free):
        raise SolverError("region has no free vertex")
    Kff = K[free][:, free]
    Mff = M[free][:, free]
    guess = None if x0 is None else np.asarray(x0)[free]
    res = smallest_generalized_eig(Kff, Mff, rel_tolerance, x0=guess)
    u = np.zeros(mesh.n_vertices)
    u[free] = res.vector
    return res, u
