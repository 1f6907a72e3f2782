import numpy as np
import pytest

from lipdensity.constructions.phi_star import (PhiStarSpec, default_lambda, helper_bump,
                                               helper_cumulative, jacobian_check, phi_star,
                                               region_checks, sample_points, xi, xi_closed_form)


@pytest.fixture(scope="module")
def spec():
    return PhiStarSpec()


def test_helper_bump_properties():
    tau = np.linspace(0, 1, 2001)
    vals = helper_bump(tau)
    assert np.all(vals >= 0) and vals.max() < 2
    assert helper_cumulative(1.0) == 1.0
    assert helper_cumulative(0.5) == pytest.approx(0.5, abs=1e-12)
    assert np.all(helper_bump([-0.5, 1.5]) == 0)


def test_f_dominates_four_lambda(spec):
    xp = np.random.default_rng(0).uniform(-0.2, 0.2, (500, 1))
    lam, f = spec.lam(xp), spec.f(xp)
    assert np.all(f >= 4 * lam) and np.all(lam >= 0)
    assert spec.f([[0.0]])[0] == 0


def test_graph_maps_to_zero(spec):
    xp = np.array([[0.01], [0.05], [-0.09], [0.2]])
    np.testing.assert_allclose(xi(spec, xp, spec.lam(xp)), 0.0, atol=1e-15)


def test_origin_is_fixed(spec):
    np.testing.assert_array_equal(xi(spec, [[0.0]], [0.3]), [0.3])


def test_region_identities_and_speed(spec):
    rows = {r["check"]: r for r in region_checks(spec, 2000, 1)}
    for key in ("below_graph", "outside_band", "graph_to_zero"):
        assert rows[key]["max_error"] <= 1e-8
    assert rows["monotone"]["min_derivative"] >= 0.5 - 1e-3


def test_quadrature_agrees_with_closed_form(spec):
    pts = sample_points(spec, 200, 2)
    xp, xv = pts[:, :-1], pts[:, -1]
    np.testing.assert_allclose(xi(spec, xp, xv), xi_closed_form(spec, xp, xv), atol=1e-10)


def test_phi_star_is_increasing_along_verticals(spec):
    xp = np.full((400, 1), 0.06)
    xv = np.linspace(-0.1, 0.1, 400)
    out = phi_star(spec, np.column_stack([xp, xv]))
    np.testing.assert_array_equal(out[:, 0], xp[:, 0])
    assert np.all(np.diff(out[:, 1]) > 0)


def test_jacobian_lower_bound(spec):
    assert jacobian_check(spec, 2000, 3) >= 0.5 - 1e-3


def test_quadrature_failure_is_reported():
    coarse = PhiStarSpec(nodes=2)
    with pytest.raises(RuntimeError):
        xi(coarse, [[0.06]], [0.2])


def test_profile_dimension_is_checked(spec):
    with pytest.raises(ValueError):
        spec.f([[0.1, 0.2]])
    assert default_lambda([[0.2]])[0] == 0
