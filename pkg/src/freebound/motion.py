"""Harmonic extension of the interface displacement to the whole mesh."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import Coefficient, assemble_stiffness, dirichlet_split, solve_with_operator
from .mesh import InterfaceCurve, Marker, Mesh, MeshError, Region, signed_areas, triangle_angles


def neumann_tangents(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """NEUMANN vertex ids and the unit tangent of their boundary line."""
    ids = np.flatnonzero(mesh.markers == Marker.NEUMANN)
    bedges = mesh.boundary_edges
    tangents = np.zeros((len(ids), 2))
    for k, vid in enumerate(ids):
        rows = bedges[(bedges == vid).any(axis=1)]
        nbrs = rows[rows != vid]
        if len(nbrs) != 2:
            raise MeshError(f"NEUMANN vertex {vid} is not on a simple boundary")
        t = mesh.vertices[nbrs[1]] - mesh.vertices[nbrs[0]]
        tangents[k] = t / np.linalg.norm(t)
    return ids, tangents


def harmonic_displacement(
    mesh: Mesh,
    interface: InterfaceCurve,
    interface_displacement,
    coefficient_plus: Coefficient = 1.0,
    coefficient_minus: Coefficient = 1.0,
    operators: dict | None = None,
    rel_tolerance: float = 1e-10,
    x0=None,
) -> np.ndarray:
    """Componentwise a-harmonic extension, zero on the outer Dirichlet boundary.

    ``operators`` may hold prebuilt Neumann stiffness matrices keyed by
    :class:`Region`.  NEUMANN vertices get the natural condition and are then
    projected onto their boundary line.
    """
    d = np.asarray(interface_displacement, float).reshape(len(interface), 2)
    omega = np.zeros((mesh.n_vertices, 2))
    coeffs = {Region.OMEGA_PLUS: coefficient_plus, Region.OMEGA_MINUS: coefficient_minus}
    for region, a in coeffs.items():
        K = operators.get(region) if operators else None
        if K is None:
            K = assemble_stiffness(mesh, region, a)
        free, fixed = dirichlet_split(mesh, region)
        verts = np.concatenate([free, fixed])
        for j in range(2):
            data = np.zeros(mesh.n_vertices)
            data[interface.vertex_ids] = d[:, j]
            guess = None if x0 is None else np.asarray(x0)[:, j]
            sol = solve_with_operator(K, free, fixed, data, rel_tolerance, guess)
            omega[verts, j] = sol[verts]
    ids, tangents = neumann_tangents(mesh)
    if len(ids):
        along = np.einsum("ij,ij->i", omega[ids], tangents)
        omega[ids] = along[:, None] * tangents
    omega[interface.vertex_ids] = d
    return omega


def apply_displacement(mesh: Mesh, omega) -> Mesh:
    omega = np.asarray(omega, float)
    if omega.shape != mesh.vertices.shape:
        raise ValueError("displacement must have shape (n_vertices, 2)")
    return mesh.with_vertices(mesh.vertices + omega)


@dataclass(frozen=True)
class MotionCheck:
    ok: bool
    inverted: bool
    min_angle: float
    worst_triangle: int

    def __bool__(self):
        return self.ok


def validate_motion(old_mesh: Mesh, new_mesh: Mesh, min_angle_floor: float = 5.0) -> MotionCheck:
    """Accept a moved mesh iff no triangle is inverted and angles stay above the floor."""
    if old_mesh.triangles.shape != new_mesh.triangles.shape or not np.array_equal(old_mesh.triangles, new_mesh.triangles):
        raise ValueError("meshes differ in connectivity")
    areas = signed_areas(new_mesh.vertices, new_mesh.triangles)
    angles = triangle_angles(new_mesh.vertices, new_mesh.triangles).min(axis=1)
    inverted = areas <= 0
    if inverted.any():
        worst = int(np.argmin(areas))
        return MotionCheck(False, True, float(angles.min()), worst)
    worst = int(np.argmin(angles))
    min_angle = float(angles[worst])
    return MotionCheck(min_angle >= min_angle_floor, False, min_angle, worst)
