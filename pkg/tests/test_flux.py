import numpy as np
import pytest
from hypothesis import given, strategies as st

from freebound.fem import assemble_stiffness
from freebound.flux import (
    assemble_interface_diffusion,
    assemble_interface_mass,
    interface_residual,
    recover_flux,
    recover_side_flux,
)
from freebound.mesh import InterfaceCurve, Marker, Mesh, Region, build_disk_mesh, build_strip_mesh, rectangle_grid
from freebound.applications.plasma import ellipse


def marker(p):
    x = p[:, 0] - 0.5
    return np.where(x > 0, Marker.SIGMA_PLUS, np.where(x < 0, Marker.SIGMA_MINUS, Marker.GAMMA))


@pytest.fixture(scope="module")
def split_square():
    return build_strip_mesh((0, 1), (0, 1), 0.1, [(0.5, 0), (0.5, 1)], marker)


def edge_mesh(length=1.0):
    mesh = rectangle_grid(1, 1, (0, length), (0, 1))
    return mesh, InterfaceCurve([0, 1])


def test_edge_mass():
    mesh, iface = edge_mesh()
    Q = assemble_interface_mass(mesh, iface).toarray()
    assert np.allclose(Q, [[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
    assert np.allclose(assemble_interface_mass(mesh, iface, 4.0).toarray(), 4 * Q)


def test_edge_diffusion():
    mesh, iface = edge_mesh(0.25)
    D = assemble_interface_diffusion(mesh, iface).toarray()
    assert np.allclose(D, 4 * np.array([[1, -1], [-1, 1]]))
    assert np.allclose(D @ np.ones(2), 0)


def test_closed_mass_row_sums():
    mesh, iface = build_disk_mesh((0, 0), 1, 0.2, ellipse((0.1, 0), (0.3, 0.4), n=17))
    Q = assemble_interface_mass(mesh, iface, 2.5)
    p = iface.points(mesh)
    ell = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
    expected = 2.5 * (ell + np.roll(ell, 1)) / 2
    assert np.allclose(np.asarray(Q.sum(axis=1)).ravel(), expected)


def test_residual_of_linear_field(split_square):
    mesh, iface = split_square
    K = assemble_stiffness(mesh, Region.OMEGA_PLUS)
    u = mesh.vertices[:, 0] - 0.5
    mu = interface_residual(K, u, iface)
    Q = assemble_interface_mass(mesh, iface)
    lumped = np.asarray(Q.sum(axis=1)).ravel()
    assert np.allclose(mu, -lumped, atol=1e-13)
    assert np.allclose(interface_residual(K, 2 * u, iface), 2 * mu)
    assert not interface_residual(K, np.zeros_like(u), iface).any()


def test_recover_linear_exact(split_square):
    mesh, iface = split_square
    u = mesh.vertices[:, 0] - 0.5
    alpha = recover_side_flux(mesh, iface, u, Region.OMEGA_PLUS)
    assert np.allclose(alpha, -1.0, atol=1e-8)


def test_recover_both_sides(split_square):
    mesh, iface = split_square
    x = mesh.vertices[:, 0] - 0.5
    u = 2 * np.minimum(x, 0) + np.maximum(x, 0)
    ap = recover_side_flux(mesh, iface, u, Region.OMEGA_PLUS)
    am = recover_side_flux(mesh, iface, -u, Region.OMEGA_MINUS)
    assert np.allclose(ap, -1.0, atol=1e-8)
    assert np.allclose(am, -2.0, atol=1e-8)


@given(st.floats(-3, 3), st.floats(0.5, 50))
def test_recover_scaled_linear(gx, a):
    """Any linear field that vanishes on a straight interface is recovered exactly."""
    mesh, iface = build_strip_mesh((0, 1), (0, 1), 0.2, [(0.5, 0), (0.5, 1)], marker)
    u = gx * (mesh.vertices[:, 0] - 0.5)
    alpha = recover_side_flux(mesh, iface, u, Region.OMEGA_PLUS, a)
    assert np.allclose(alpha, -gx, atol=1e-8 * max(1, abs(gx)))


def test_zero_mu():
    mesh, iface = edge_mesh()
    Q = assemble_interface_mass(mesh, iface)
    assert not recover_flux(Q, np.zeros(2)).any()


def test_epsilon_zero_matches_plain(split_square):
    mesh, iface = split_square
    Q = assemble_interface_mass(mesh, iface)
    D = assemble_interface_diffusion(mesh, iface)
    mu = np.sin(np.arange(len(iface)))
    assert np.array_equal(recover_flux(Q, mu, 0.0, D), recover_flux(Q, mu))


def test_large_epsilon_smooths(split_square):
    mesh, iface = split_square
    Q = assemble_interface_mass(mesh, iface)
    D = assemble_interface_diffusion(mesh, iface)
    mu = (-1.0) ** np.arange(len(iface)) + 0.5
    alpha = recover_flux(Q, mu, 1e6, D)
    mean = mu.sum() / Q.sum()
    assert np.ptp(alpha) < 1e-3 * np.ptp(recover_flux(Q, mu))
    assert alpha.mean() == pytest.approx(mean, rel=1e-3)
