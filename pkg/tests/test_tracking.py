import numpy as np
import pytest
from hypothesis import given, strategies as st

from freebound.mesh import Marker, interface_from_line, rectangle_grid
from freebound.tracking import (
    PINNED,
    SLIDE,
    JumpCondition,
    TauPolicy,
    advance_interface,
    compute_sigma,
    flux_weight,
    min_interface_edge,
    select_tau,
    vertex_constraints,
)
from freebound.applications.jet import example_one_spec, jet_geometry

P3 = np.zeros((3, 2))


def test_sigma_known_line_slopes():
    s = compute_sigma(np.full(3, -1.0), np.full(3, -2.0), JumpCondition(1, 1, -3.0), P3)
    assert np.array_equal(s, np.zeros(3))


@given(st.floats(-10, 10), st.floats(0.1, 10))
def test_sigma_symmetric_cancels(alpha, a):
    s = compute_sigma(np.full(3, alpha), np.full(3, alpha), JumpCondition(a, a, 0.0), P3)
    assert np.allclose(s, 0.0, atol=1e-12 * (1 + a * alpha * alpha))


def test_sigma_heterogeneous_formula():
    s = compute_sigma([0.1], [1.0], JumpCondition(100.0, 1.0, -1.0), np.zeros((1, 2)))
    assert s[0] == pytest.approx(1.0)


def test_sigma_lambda2_form():
    j = JumpCondition(1, 1, -3.0)
    s = compute_sigma([-1.0], [-2.0], j, np.zeros((1, 2)), "lambda2")
    assert s[0] == pytest.approx(1 - 4 - 9)


def test_sigma_shape_mismatch():
    with pytest.raises(ValueError):
        compute_sigma(np.zeros(3), np.zeros(2), JumpCondition(), P3)
    with pytest.raises(ValueError):
        compute_sigma(np.zeros(3), np.zeros(3), JumpCondition(), P3, "lambda3")


def test_generalized_jump():
    j = JumpCondition(lam=0.5, phi=lambda x: np.asarray(x) ** 3, psi=lambda x: 2 * np.asarray(x))
    s = compute_sigma([1.0], [0.25], j, np.zeros((1, 2)))
    assert s[0] == pytest.approx(1 - 0.5 - 0.5)
    with pytest.raises(ValueError):
        JumpCondition(phi=lambda x: -np.asarray(x), psi=lambda x: x)
    with pytest.raises(ValueError):
        JumpCondition(phi=lambda x: x)


def test_nonpositive_coefficient_rejected():
    with pytest.raises(ValueError):
        JumpCondition(0.0, 1.0)


@pytest.fixture(scope="module")
def grid_line():
    mesh = rectangle_grid(20, 20)
    iface = interface_from_line(mesh, lambda p: np.isclose(p[:, 0], 0.5))
    return mesh, iface


def test_tau_zero_sigma(grid_line):
    mesh, iface = grid_line
    assert select_tau(np.zeros(len(iface)), iface, mesh, TauPolicy.capped(0.2, 1.0)) == 1.0


def test_tau_cap(grid_line):
    mesh, iface = grid_line
    assert min_interface_edge(mesh, iface) == pytest.approx(0.05)
    sigma = np.zeros(len(iface))
    sigma[3] = -10.0
    assert select_tau(sigma, iface, mesh, TauPolicy.capped(0.2, 1.0)) == pytest.approx(0.001)


def test_tau_fixed(grid_line):
    mesh, iface = grid_line
    assert select_tau(np.full(len(iface), 1e3), iface, mesh, TauPolicy.fixed(1e-4)) == 1e-4


def test_tau_stability_bound(grid_line):
    mesh, iface = grid_line
    n = len(iface)
    w = flux_weight(np.full(n, -1.0), np.full(n, -2.0), JumpCondition(1, 1, -3), np.zeros((n, 2)))
    assert np.allclose(w, 5.0)
    tau = select_tau(np.full(n, 1e-3), iface, mesh, TauPolicy.capped(0.2, 1.0, 0.1), weight=w)
    assert tau == pytest.approx(0.1 * 0.05 / 5.0)


def test_advance_zero_sigma(grid_line):
    mesh, iface = grid_line
    normals = np.tile([1.0, 0.0], (len(iface), 1))
    assert not advance_interface(mesh, iface, normals, np.zeros(len(iface)), 0.3).any()


def test_advance_formula(grid_line):
    mesh, iface = grid_line
    normals = np.tile([1.0, 0.0], (len(iface), 1))
    d = advance_interface(mesh, iface, normals, np.full(len(iface), 2.0), 0.01)
    assert np.allclose(d[5], [0.02, 0.0], atol=1e-17)
    # endpoints sit on Dirichlet boundary and stay put
    assert not d[0].any() and not d[-1].any()


def test_advance_cap(grid_line):
    mesh, iface = grid_line
    normals = np.tile([1.0, 0.0], (len(iface), 1))
    with pytest.raises(ValueError):
        advance_interface(mesh, iface, normals, np.full(len(iface), 2.0), 0.01, max_displacement=0.01)


def test_jet_top_endpoint_slides():
    mesh, iface = jet_geometry(example_one_spec(), 0.2)
    modes, tangents = vertex_constraints(mesh, iface)
    assert modes[-1] == SLIDE
    assert np.all(modes[:-1][iface.points(mesh)[:-1, 1] <= 0] == PINNED)
    n = len(iface)
    normals = np.tile([0.8, 0.6], (n, 1))
    d = advance_interface(mesh, iface, normals, np.ones(n), 0.01)
    assert np.allclose(d[-1], [0.008, 0.0], atol=1e-15)
    assert mesh.markers[iface.vertex_ids[-1]] == Marker.GAMMA
