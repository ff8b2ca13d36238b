"""Variational recovery of the interface normal flux.

For a discrete a-harmonic field vanishing on the interface, the residual of
the Neumann stiffness matrix at an interface vertex equals the boundary
integral of the normal flux against that vertex's hat function.  Inverting
the (coefficient-weighted) interface mass matrix turns those residuals into
nodal values of a piecewise-linear normal derivative.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .fem import Coefficient, SolverError, assemble_stiffness, cg_solve, evaluate_coefficient
from .mesh import InterfaceCurve, Mesh, MeshError


def interface_residual(neumann_operator, field, interface: InterfaceCurve) -> np.ndarray:
    """``mu_i = (A u)_i`` at the interface vertices (all row blocks included)."""
    field = np.asarray(field, float)
    if neumann_operator.shape[1] != len(field):
        raise SolverError("field length does not match operator dimension")
    return np.asarray(neumann_operator @ field)[interface.vertex_ids]


def _segment_lengths(mesh: Mesh, interface: InterfaceCurve) -> np.ndarray:
    segs = interface.segments
    length = np.linalg.norm(mesh.vertices[segs[:, 1]] - mesh.vertices[segs[:, 0]], axis=1)
    if (length <= 0).any():
        raise MeshError("zero-length interface edge")
    return length


def _local_index(interface: InterfaceCurve):
    n = len(interface)
    i = np.arange(n)
    j = (i + 1) % n if interface.closed else i[1:]
    return i[: len(j)], j


def _one_sided_coefficient(mesh: Mesh, interface: InterfaceCurve, coefficient: Coefficient, region) -> np.ndarray:
    """Coefficient on each interface edge, taken from the adjacent triangle in ``region``."""
    segs = interface.segments
    if not callable(coefficient):
        return np.full(len(segs), float(coefficient))
    if region is None:
        mid = 0.5 * (mesh.vertices[segs[:, 0]] + mesh.vertices[segs[:, 1]])
        return evaluate_coefficient(coefficient, mid)
    cent = np.empty((len(segs), 2))
    for k, (a, b) in enumerate(segs):
        e = mesh.edge_index[(min(a, b), max(a, b))]
        tris = [t for t in mesh.edge_triangles[e] if mesh.regions[t] == region]
        if not tris:
            raise MeshError(f"interface edge {k} has no neighbour in region {region}")
        cent[k] = mesh.vertices[mesh.triangles[tris[0]]].mean(axis=0)
    return evaluate_coefficient(coefficient, cent)


def assemble_interface_mass(mesh: Mesh, interface: InterfaceCurve, coefficient: Coefficient = 1.0, region=None):
    """``q_ij = int_Gamma a phi_i phi_j ds`` along the interface chain."""
    length = _segment_lengths(mesh, interface)
    a = _one_sided_coefficient(mesh, interface, coefficient, region)
    if (a <= 0).any():
        raise SolverError("interface coefficient must be positive")
    w = a * length / 6.0
    i, j = _local_index(interface)
    n = len(interface)
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([2 * w, 2 * w, w, w])
    Q = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    Q.sort_indices()
    return Q


def assemble_interface_diffusion(mesh: Mesh, interface: InterfaceCurve):
    """1D P1 stiffness along the interface (edge weights 1/length)."""
    w = 1.0 / _segment_lengths(mesh, interface)
    i, j = _local_index(interface)
    n = len(interface)
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([w, w, -w, -w])
    D = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    D.sort_indices()
    return D


def recover_flux(Q, mu, epsilon: float = 0.0, D=None, rel_tolerance: float = 1e-13) -> np.ndarray:
    """Nodal flux coefficients ``alpha`` solving ``(Q + epsilon D) alpha = mu``."""
    if epsilon < 0:
        raise SolverError("epsilon must be non-negative")
    A = Q if (epsilon == 0 or D is None) else Q + epsilon * D
    return cg_solve(A, np.asarray(mu, float), rel_tolerance)


def recover_side_flux(
    mesh: Mesh,
    interface: InterfaceCurve,
    field,
    region,
    coefficient: Coefficient = 1.0,
    epsilon: float = 0.0,
    K=None,
    source=None,
) -> np.ndarray:
    """Outward normal derivative (w.r.t. ``region``) of ``field`` at interface vertices.

    ``source`` is the assembled right-hand side the field satisfies in the
    region (e.g. ``beta * M u`` for an eigenfunction); it is removed from the
    residual so that only the boundary flux remains.
    """
    if K is None:
        K = assemble_stiffness(mesh, region, coefficient)
    mu = interface_residual(K, field, interface)
    if source is not None:
        mu = mu - np.asarray(source, float)[interface.vertex_ids]
    Q = assemble_interface_mass(mesh, interface, coefficient, region)
    D = assemble_interface_diffusion(mesh, interface) if epsilon else None
    return recover_flux(Q, mu, epsilon, D)
