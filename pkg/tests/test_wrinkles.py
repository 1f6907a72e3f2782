import math

import numpy as np
import pytest

from lipdensity.constructions.wrinkles import (WrinkleSpec, bilipschitz_estimate, flat_length,
                                               sample_box, sawtooth_length, shear_map,
                                               wrinkle_domain, wrinkle_field, wrinkle_surface)
from lipdensity.grid import lipschitz_estimate, trace_line


def test_spec_geometry_is_exact_dyadic():
    spec = WrinkleSpec(6)
    assert spec.spacing == 2.0 ** -16
    assert spec.slab_count == 2 ** 16 + 1
    slabs = spec.slabs()
    assert len(slabs) == spec.slab_count
    assert slabs[0] == 1.0 and slabs[-1] == 2.0
    assert np.all(np.diff(slabs) == spec.spacing)


def test_spec_json_round_trip():
    spec = WrinkleSpec(7, n=2)
    assert WrinkleSpec.from_json(spec.to_json()) == spec


def test_phi_vanishes_on_the_skeleton():
    spec = WrinkleSpec(6)
    xs = spec.slabs(1.0, 1.0 + 8 * spec.spacing)
    z = np.linspace(spec.z_center - spec.half_height, spec.z_center + spec.half_height, 7)
    X, Z = np.meshgrid(xs, z, indexing="ij")
    assert np.all(spec.phi_plane(X, Z) == 0)
    edge = spec.z_center + spec.half_height
    assert np.all(spec.phi_plane(np.linspace(1, 2, 11), np.full(11, edge)) == 0)


def test_grid_field_matches_closed_form_and_is_1_lipschitz():
    spec = WrinkleSpec(6)
    d = wrinkle_domain(spec, teeth=4, samples_per_tooth=16, z_nodes=33)
    f = wrinkle_field(spec, d)
    X, Z = d.mesh()
    np.testing.assert_allclose(f.values[..., 0], spec.phi_plane(X, Z), atol=1e-15)
    assert lipschitz_estimate(f) <= 1 + 1e-9


def test_trace_is_a_sawtooth_with_the_slab_period():
    spec = WrinkleSpec(6)
    d = wrinkle_domain(spec, teeth=4, samples_per_tooth=16, z_nodes=33)
    f = wrinkle_field(spec, d)
    line = trace_line(f, 0, [spec.z_center])
    heights = line.points[:, 1]
    zeros = line.points[heights == 0, 0]
    np.testing.assert_allclose(np.diff(zeros), spec.spacing, rtol=1e-9)
    assert heights.max() == pytest.approx(spec.spacing / 2)


@pytest.mark.parametrize("m", [6, 7, 8])
@pytest.mark.parametrize("spt", [4, 8, 16])
def test_sawtooth_length_is_sqrt_two(m, spt):
    assert sawtooth_length(m, spt) == pytest.approx(math.sqrt(2), rel=0.01)


def test_flat_curve_length_is_one_and_sampling_floor_enforced():
    assert flat_length() == 1.0
    with pytest.raises(ValueError):
        sawtooth_length(6, 3)


def test_shear_fixes_points_with_zero_base_height():
    spec = WrinkleSpec(6)
    pts = np.array([[1.0 + 3 * spec.spacing, 0.001, spec.z_center],
                    [1.5, -0.002, spec.z_center + spec.half_height]])
    np.testing.assert_array_equal(shear_map(spec, pts), pts)
    np.testing.assert_array_equal(shear_map(spec, pts, fix_boundary=True), pts)


@pytest.mark.parametrize("fix", [False, True])
def test_shear_inverse_residual(fix):
    spec = WrinkleSpec(7)
    pts = sample_box(spec, 5000, np.random.default_rng(0), teeth_window=4)
    back = shear_map(spec, shear_map(spec, pts, fix_boundary=fix), inverse=True, fix_boundary=fix)
    assert np.max(np.abs(back - pts)) < 1e-12


def test_boundary_fixing_shear_is_identity_on_the_y_faces():
    spec = WrinkleSpec(6)
    rng = np.random.default_rng(3)
    pts = sample_box(spec, 200, rng, teeth_window=4)
    pts[:, 1] = np.where(rng.random(200) < 0.5, -1.0, 1.0) * spec.half_height
    np.testing.assert_allclose(shear_map(spec, pts, fix_boundary=True), pts, atol=1e-18)


def test_bilipschitz_bounds_do_not_depend_on_m():
    bounds = [bilipschitz_estimate(WrinkleSpec(m), 20000, m) for m in (6, 7, 8)]
    L = max(max(hi, 1 / lo) for lo, hi in bounds)
    assert L < 2.0
    for lo, hi in bounds:
        assert 1 / L <= lo <= 1 <= hi <= L


def test_wrinkle_surface_shape():
    spec = WrinkleSpec(6)
    x, z, h = wrinkle_surface(spec, teeth=2, samples_per_tooth=4, z_nodes=5)
    assert h.shape == (len(x), len(z)) == (9, 5)
    assert h.min() == 0 and h.max() == pytest.approx(spec.spacing / 2)
