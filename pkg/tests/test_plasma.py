import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jn_zeros

from freebound.driver import SolverConfig
from freebound.mesh import Region, check_mesh
from freebound.applications.plasma import (
    PlasmaSpec,
    circularity,
    cut_domain_spec,
    disk_spec,
    ellipse,
    plasma_problem,
    plasma_run,
    radial_eigenpair,
    radial_jump,
    radial_plasma_oracle,
)

J01 = jn_zeros(0, 1)[0]

# frozen output of the 1D oracle (resolution 2000); recomputed in test_oracle_frozen_values
R_STAR = 0.65484
BETA_STAR = 13.4863


def test_radial_eigenpair_converges_to_bessel():
    errs = [radial_eigenpair(n)[0] - J01**2 for n in (100, 200, 400)]
    assert errs[-1] / J01**2 < 1e-4
    assert np.log2(errs[0] / errs[1]) > 1.8 and np.log2(errs[1] / errs[2]) > 1.8


def test_radial_flux_mass_ratio():
    # v = J0(j r): v'(1)^2 / int v^2 = j^2 J1^2 / (pi J1^2)
    _, flux, mass = radial_eigenpair(2000)
    assert flux**2 / mass == pytest.approx(J01**2 / np.pi, rel=1e-5)


def test_oracle_frozen_values():
    sol = radial_plasma_oracle(1.0, 3.0)
    assert sol.R_star == pytest.approx(R_STAR, abs=1e-5)
    assert sol.beta_star == pytest.approx(BETA_STAR, abs=1e-4)
    assert sol.beta_star == pytest.approx(13.6727, rel=0.02)
    assert radial_jump(sol.R_star, 1.0, sol.beta_unit, sol.flux_unit, sol.mass_unit) == pytest.approx(3.0)


@settings(max_examples=10)
@given(st.floats(1.0, 20.0), st.floats(0.1, 5.0))
def test_radius_grows_with_jump_level(lam, dlam):
    """At the outer root the jump residual increases in R, so R* increases with lambda."""
    a = radial_plasma_oracle(1.0, lam, resolution=400)
    b = radial_plasma_oracle(1.0, lam + dlam, resolution=400)
    assert b.R_star > a.R_star
    assert b.beta_star < a.beta_star


def test_oracle_rejects_bad_input():
    with pytest.raises(ValueError):
        radial_plasma_oracle(-1.0, 3.0)
    with pytest.raises(ValueError):
        radial_eigenpair(2)


def test_spec_validation():
    with pytest.raises(ValueError):
        PlasmaSpec(gamma=0.0)


def test_circularity():
    assert circularity(ellipse((0.3, -0.1), (0.2, 0.2))) < 1e-12
    assert circularity(ellipse((0, 0), (0.2, 0.4))) == pytest.approx((0.4 - 0.2) / np.mean(
        np.linalg.norm(ellipse((0, 0), (0.2, 0.4)), axis=1)))


@pytest.mark.parametrize("make", [disk_spec, cut_domain_spec])
def test_geometries_build(make):
    problem, mesh, iface = plasma_problem(make(), 0.1)
    check_mesh(mesh)
    assert iface.closed and problem.eigen_minus
    inside = mesh.regions == Region.OMEGA_MINUS
    assert inside.any() and (~inside).any()


def test_cut_domain_stays_inside_cuts():
    _, mesh, _ = plasma_problem(cut_domain_spec(), 0.1)
    v = mesh.vertices
    assert v[:, 1].min() >= -2 / 3 - 1e-12
    # arcs are polygonal, so points on a chord sit up to the sagitta inside
    assert np.linalg.norm(v - [5 / 3, 0], axis=1).min() >= 1 - 1e-4


def test_short_run_records_beta():
    result = plasma_run(disk_spec(), 0.1, SolverConfig(max_iterations=5))
    assert len(result.history) == 5
    betas = [r.beta for r in result.history]
    assert all(b is not None and b > 0 for b in betas)
    # the ellipse start is smaller than the equilibrium core
    assert betas[0] > BETA_STAR
    assert result.beta == pytest.approx(betas[-1], rel=0.05)
