import numpy as np
import pytest

from freebound.driver import SolverConfig, evaluate
from freebound.mesh import Marker, rectangle_grid
from freebound.applications.benchmarks import (
    KNOWN_LINE_LAMBDA,
    BenchmarkSpec,
    benchmark_problem,
    hetero_a_minus,
    hetero_a_plus,
    known_line_data,
    known_line_errors,
    sine_interface,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        BenchmarkSpec("nope")
    with pytest.raises(ValueError):
        BenchmarkSpec("known_line", 0.0)


def test_exact_jump_level():
    assert 1.0 * 1.0**2 - 1.0 * 2.0**2 == KNOWN_LINE_LAMBDA
    problem, mesh, iface = benchmark_problem(BenchmarkSpec("known_line", 0.1, np.array([(0.5, 0.0), (0.5, 1.0)])))
    ev = evaluate(problem, mesh, iface, SolverConfig())
    assert np.allclose(ev.alpha_plus, -1.0, atol=1e-8)
    assert np.allclose(ev.alpha_minus, -2.0, atol=1e-8)
    assert ev.sigma_inf < 1e-7


def test_sine_start():
    problem, mesh, iface = benchmark_problem(BenchmarkSpec("known_line", 0.1))
    p = iface.points(mesh)
    # resampled points lie on chords of the 400-segment input polyline
    assert np.abs(p[:, 0] - 0.5 - 0.1 * np.sin(2 * np.pi * p[:, 1])).max() < 1e-4
    assert sine_interface(8).shape == (9, 2)
    assert mesh.markers[np.argmin(np.linalg.norm(mesh.vertices - [0, 0], axis=1))] == Marker.SIGMA_MINUS


def test_heterogeneous_coefficients():
    pts = np.array([[0.3, 0.5], [-0.3, 0.5], [0.3, -0.5], [-0.3, -0.5], [0.0, 0.0]])
    assert hetero_a_plus(pts).tolist() == [100, 100, 1, 1, 100]
    assert hetero_a_minus(pts).tolist() == [1, 1, 100, 100, 1]
    problem, mesh, iface = benchmark_problem(BenchmarkSpec("heterogeneous_circle", 0.1))
    assert problem.jump.lam == -1.0
    assert np.allclose(iface.points(mesh)[[0, -1]], [[0, -1], [0, 1]])
    assert np.allclose(np.abs(iface.points(mesh)[:, 0]), 0.0)


def test_errors_vanish_on_exact_interpolant():
    mesh = rectangle_grid(10, 10)
    u = known_line_data(mesh.vertices)
    h1, sup = known_line_errors(mesh, u)
    assert h1 < 1e-7 and sup == 0.0  # square root of rounding-level energy


def test_errors_measure_a_kink_inside_elements():
    mesh = rectangle_grid(5, 5)  # x = 0.5 cuts through elements
    u = known_line_data(mesh.vertices)
    h1, sup = known_line_errors(mesh, u)
    assert sup == 0.0 and h1 > 0.1
    h1_shift, _ = known_line_errors(mesh, u + 0.01 * mesh.vertices[:, 1])
    assert h1_shift > h1
