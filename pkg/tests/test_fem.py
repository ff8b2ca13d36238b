import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st
from scipy.special import jn_zeros

from freebound.fem import (
    ConvergenceError,
    SingularSystemError,
    assemble_mass,
    assemble_stiffness,
    cg_solve,
    smallest_generalized_eig,
    solve_dirichlet,
    solve_eigen_region,
)
from freebound.mesh import Marker, Mesh, Region, build_disk_mesh, build_strip_mesh, rectangle_grid
from freebound.applications.plasma import ellipse

UNIT = Mesh(np.array([[0.0, 0], [1, 0], [0, 1]]), np.array([[0, 1, 2]]), np.zeros(3, np.int8), np.ones(1, np.int8))


def test_element_stiffness():
    K = assemble_stiffness(UNIT).toarray()
    assert np.allclose(K, 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]]), atol=1e-15)
    assert np.allclose(assemble_stiffness(UNIT, coefficient=100.0).toarray(), 100 * K)


def test_two_triangle_square_row_sums():
    K = assemble_stiffness(rectangle_grid(1, 1)).toarray()
    assert K.shape == (4, 4)
    assert np.allclose(K.sum(axis=1), 0, atol=1e-15)
    assert np.allclose(K, K.T)


def test_element_mass():
    M = assemble_mass(UNIT).toarray()
    assert np.allclose(M, np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24, atol=1e-16)


@given(st.integers(1, 6), st.integers(1, 6), st.floats(-3, 3))
def test_mass_partition_of_unity(nx, ny, c):
    mesh = rectangle_grid(nx, ny)
    M = assemble_mass(mesh)
    assert M.sum() == pytest.approx(1.0)
    u = np.full(mesh.n_vertices, c)
    assert u @ (M @ u) == pytest.approx(c * c, abs=1e-12)


@given(st.integers(2, 7), st.floats(-2, 2), st.floats(-2, 2), st.floats(-1, 1))
def test_linear_data_reproduced(n, a, b, c):
    mesh = rectangle_grid(n, n)

    def g(p):
        return a * p[:, 0] + b * p[:, 1] + c

    u = solve_dirichlet(mesh, None, 1.0, g)
    assert np.allclose(u, g(mesh.vertices), atol=1e-10)


def test_zero_data_gives_zero():
    mesh = rectangle_grid(4, 4)
    assert not solve_dirichlet(mesh, None, 1.0, np.zeros(mesh.n_vertices)).any()


def test_half_strip_linear_profile():
    def marker(p):
        return np.where(p[:, 0] > 0.5, Marker.SIGMA_PLUS, np.where(p[:, 0] < 0.5, Marker.SIGMA_MINUS, Marker.GAMMA))

    mesh, iface = build_strip_mesh((0, 1), (0, 1), 0.1, [(0.5, 0), (0.5, 1)], marker)
    # Neumann top and bottom inside the left half: only x = 0 and x = 0.5 carry data
    m = mesh.markers.copy()
    x, y = mesh.vertices.T
    m[((y == 0) | (y == 1)) & (x > 0) & (x < 0.5)] = Marker.NEUMANN
    mesh = Mesh(mesh.vertices, mesh.triangles, m, mesh.regions)
    u = solve_dirichlet(mesh, Region.OMEGA_MINUS, 1.0, lambda p: 2 * (p[:, 0] - 0.5))
    left = mesh.region_vertices(Region.OMEGA_MINUS)
    assert np.allclose(u[left], 2 * (x[left] - 0.5), atol=1e-10)


def test_cg_identity_one_iteration():
    b = np.arange(1.0, 6.0)
    assert np.array_equal(cg_solve(sp.identity(5, format="csr"), b, max_iterations=1), b)


def test_cg_diagonal():
    assert np.allclose(cg_solve(np.diag([1.0, 4.0]), np.array([1.0, 4.0])), [1, 1], atol=1e-14)


def test_cg_indefinite():
    A = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ConvergenceError):
        cg_solve(A, np.array([1.0, -1.0]))


def test_no_dirichlet_vertex():
    mesh = rectangle_grid(3, 3)
    mesh = Mesh(mesh.vertices, mesh.triangles, np.full(mesh.n_vertices, Marker.NEUMANN, np.int8), mesh.regions)
    with pytest.raises(SingularSystemError):
        solve_dirichlet(mesh, None, 1.0, np.zeros(mesh.n_vertices))


def square_beta(n):
    res, _ = solve_eigen_region(rectangle_grid(n, n), None, 1.0, rel_tolerance=1e-10)
    return res.beta


def test_square_eigenvalue_order():
    exact = 2 * np.pi**2
    errs = [square_beta(n) - exact for n in (8, 16, 32)]
    assert all(e > 0 for e in errs)  # conforming: Rayleigh-Ritz overestimates
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 1.8
    assert abs(errs[-1]) / exact < 5e-3


def test_disk_eigenvalue():
    mesh, iface = build_disk_mesh((0, 0), 1.0, 0.05, ellipse((0, 0), (0.5, 0.5)))
    m = mesh.markers.copy()
    m[iface.vertex_ids] = Marker.INTERIOR
    mesh = Mesh(mesh.vertices, mesh.triangles, m, mesh.regions)
    res, u = solve_eigen_region(mesh, None, 1.0, rel_tolerance=1e-10)
    assert res.beta == pytest.approx(jn_zeros(0, 1)[0] ** 2, rel=5e-3)
    M = assemble_mass(mesh)
    assert u @ (M @ u) == pytest.approx(1.0)
    assert (M @ u).sum() < 0


def test_eigen_matches_dense():
    mesh = rectangle_grid(6, 5)
    K = assemble_stiffness(mesh)
    M = assemble_mass(mesh)
    free = np.flatnonzero(mesh.markers == Marker.INTERIOR)
    Kf, Mf = K[free][:, free], M[free][:, free]
    res = smallest_generalized_eig(Kf, Mf, rel_tolerance=1e-12)
    import scipy.linalg

    w = scipy.linalg.eigh(Kf.toarray(), Mf.toarray(), eigvals_only=True)
    assert res.beta == pytest.approx(w[0], rel=1e-10)


def test_repeated_smallest_eigenvalue():
    # any vector of the two-dimensional eigenspace is acceptable
    K = sp.diags([1.0, 1.0, 3.0, 4.0]).tocsr()
    M = sp.identity(4, format="csr")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = smallest_generalized_eig(K, M, rel_tolerance=1e-10)
    assert res.beta == pytest.approx(1.0)
