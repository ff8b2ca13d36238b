import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freebound.driver import IterationRecord, SolverConfig, run
from freebound.io import (
    HISTORY_HEADER,
    ConfigError,
    ParseError,
    RunConfig,
    format_config,
    format_history,
    format_mesh,
    format_vtk,
    parse_config,
    parse_mesh,
    read_history,
    read_mesh,
    state_fields,
    write_history,
    write_mesh,
)
from freebound.mesh import Mesh, build_disk_mesh, rectangle_grid
from freebound.applications.benchmarks import BenchmarkSpec, benchmark_problem
from freebound.applications.plasma import disk_spec, ellipse, plasma_run

ONE = Mesh(np.array([[0.0, 0], [1, 0], [0, 1]]), np.array([[0, 1, 2]]), np.array([1, 1, 3], np.int8), np.ones(1, np.int8))


@settings(max_examples=10)
@given(st.floats(0.08, 0.3), st.floats(-0.2, 0.2))
def test_mesh_round_trip_is_bitwise(h, shift):
    mesh, iface = build_disk_mesh((0, 0), 1.0, h, ellipse((shift, 0.1), (0.3, 0.25), n=50))
    text = format_mesh(mesh, iface)
    back, biface = parse_mesh(text)
    assert format_mesh(back, biface) == text
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(biface.vertex_ids, iface.vertex_ids) and biface.closed


def test_round_trip_keeps_fixed_flags(tmp_path):
    from freebound.applications.jet import example_one_spec, jet_geometry

    mesh, iface = jet_geometry(example_one_spec(), 0.2)
    write_mesh(tmp_path / "m.txt", mesh, iface)
    back, biface = read_mesh(tmp_path / "m.txt")
    assert np.array_equal(biface.fixed, iface.fixed)
    assert np.array_equal(back.markers, mesh.markers)


def test_mesh_without_interface():
    mesh = rectangle_grid(2, 2)
    back, iface = parse_mesh(format_mesh(mesh))
    assert iface is None
    assert np.array_equal(back.triangles, mesh.triangles)


def test_bad_triangle_index_reports_line():
    lines = format_mesh(rectangle_grid(2, 2)).splitlines()
    nv = int(lines[0].split()[0])
    row = 1 + nv  # first triangle line (1-based numbering counts the header as line 1)
    parts = lines[row].split()
    parts[0] = str(nv + 5)
    lines[row] = " ".join(parts)
    with pytest.raises(ParseError) as info:
        parse_mesh("\n".join(lines))
    assert info.value.line == row + 1
    assert f"line {row + 1}" in str(info.value)


@pytest.mark.parametrize("text", ["", "3 1\n", "3 1 0\n0 0 NOPE\n"])
def test_malformed_mesh(text):
    with pytest.raises(ParseError):
        parse_mesh(text)


def test_vtk_single_triangle():
    text = format_vtk(ONE, {"u": np.array([0.0, 1.0, 2.0])})
    assert "POINTS 3 double" in text
    assert "CELLS 1 4" in text
    assert "CELL_TYPES 1\n5" in text
    assert "POINT_DATA 3" in text and "SCALARS u double 1" in text


def test_vtk_deterministic():
    problem, mesh, iface = benchmark_problem(BenchmarkSpec("known_line", 0.2))
    u = np.sin(mesh.vertices[:, 0])
    fields = state_fields(mesh, iface, u, np.ones(len(iface)))
    assert format_vtk(mesh, fields) == format_vtk(mesh, state_fields(mesh, iface, u.copy(), np.ones(len(iface))))
    assert fields["sigma"][iface.vertex_ids].tolist() == [1.0] * len(iface)


def test_empty_history(tmp_path):
    assert format_history([]) == HISTORY_HEADER + "\n"
    write_history(tmp_path / "h.csv", [])
    assert read_history(tmp_path / "h.csv") == []


def test_history_round_trip_known_line(tmp_path):
    problem, mesh, iface = benchmark_problem(BenchmarkSpec("known_line", 0.1))
    result = run(problem, mesh, iface, SolverConfig(max_iterations=25))
    write_history(tmp_path / "h.csv", result.history)
    rows = read_history(tmp_path / "h.csv")
    assert [r["sigma_inf"] for r in rows] == [r.sigma_inf for r in result.history]
    assert [r["iter"] for r in rows] == list(range(25))
    assert all(r["beta"] is None for r in rows)


def test_history_beta_populated_for_plasma():
    result = plasma_run(disk_spec(), 0.12, SolverConfig(max_iterations=3))
    lines = format_history(result.history).splitlines()[1:]
    assert len(lines) == 3 and all(line.split(",")[-1] for line in lines)


def test_history_records_are_exact():
    rec = [IterationRecord(0, 0.1 + 0.2, 1e-5, 27.5, 13.5)]
    (row,) = format_history(rec).splitlines()[1:]
    assert float(row.split(",")[1]) == 0.1 + 0.2


def test_config_round_trip():
    cfg = RunConfig()
    cfg.numerics.h = 0.1 / 3
    cfg.problem.kind = "jet"
    text = format_config(cfg)
    assert parse_config(text) == cfg
    assert format_config(parse_config(text)) == text


def test_config_comments_and_blank_lines():
    cfg = parse_config("# comment\n\nnumerics.h = 0.2  # coarse\nproblem.kind = plasma\n")
    assert cfg.numerics.h == 0.2 and cfg.problem.kind == "plasma"
    assert cfg.solver_config().tau_policy.kind == "capped"


@pytest.mark.parametrize(
    "text",
    [
        "numerics.tol = 1",
        "numerics.h = abc",
        "numerics.epsilon_tol = -1",
        "problem.kind = ocean",
        "problem.b_lo = 0.6",
        "output.snapshot_stride = -3",
        "just words",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_fixed_tau_config():
    cfg = parse_config("numerics.tau_policy = fixed\nnumerics.tau = 1e-5\n")
    policy = cfg.solver_config().tau_policy
    assert policy.kind == "fixed" and policy.tau == 1e-5
