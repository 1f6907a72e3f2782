import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from lipdensity.grid import (BoxDomain, Field, Polyline, SegmentSet, cell_derivative_lp_norm,
                             distance_to_segments, gradient, lipschitz_estimate, lp_norm,
                             point_segment_distance, polyline_length, trace_line, w1p_norm)


def unit_interval(nodes=1001):
    return BoxDomain((0.0,), (1.0,), (nodes,))


# ---------------------------------------------------------------- BoxDomain

def test_spacing_and_node_count():
    d = BoxDomain((0.0, -1.0), (2.0, 1.0), (5, 9))
    np.testing.assert_allclose(d.spacing, [0.5, 0.25])
    assert d.size == 45
    assert d.points().shape == (45, 2)


def test_periodic_axis_excludes_the_identified_end():
    d = BoxDomain.cube(1, 4, 0.0, 1.0, periodic=True)
    np.testing.assert_allclose(d.axis(0), [0.0, 0.25, 0.5, 0.75])


def test_weights_sum_to_volume():
    for periodic in (False, True):
        d = BoxDomain((0.0, 0.0, 1.0), (1.0, 2.0, 4.0), (5, 6, 7), periodic)
        assert d.weights().sum() == pytest.approx(d.volume, rel=1e-14)


@pytest.mark.parametrize("kw", [dict(lower=(0.0,), upper=(0.0,), shape=(4,)),
                                dict(lower=(0.0,), upper=(1.0,), shape=(1,)),
                                dict(lower=(0.0,) * 5, upper=(1.0,) * 5, shape=(2,) * 5)])
def test_invalid_domains_are_rejected(kw):
    with pytest.raises(ValueError):
        BoxDomain(**kw)


def test_minimum_image_distance():
    d = BoxDomain.cube(2, 10, 0.0, 1.0, periodic=True)
    assert d.distance(np.array([0.05, 0.5]), np.array([0.95, 0.5])) == pytest.approx(0.1)


def test_field_rejects_non_finite_values():
    d = unit_interval(3)
    with pytest.raises(ValueError):
        Field(d, [0.0, np.nan, 1.0])


# ---------------------------------------------------------------- gradient

def test_gradient_of_constant_is_zero():
    d = BoxDomain.cube(2, 17)
    g = gradient(Field.constant(d, 3.5))
    assert np.all(g.values == 0.0)


def test_gradient_of_first_coordinate():
    d = BoxDomain.cube(3, 9, -1.0, 2.0)
    g = gradient(Field.from_function(d, lambda x, y, z: x))
    np.testing.assert_allclose(g.values[..., 0], 1.0, atol=1e-12)
    np.testing.assert_allclose(g.values[..., 1:], 0.0, atol=1e-12)


def test_gradient_of_linear_field_is_exact():
    d = BoxDomain((0.0, 0.0), (1.0, 3.0), (33, 21))
    g = gradient(Field.from_function(d, lambda x, y: 2.0 * x - 0.7 * y + 1.0))
    np.testing.assert_allclose(g.values[..., 0], 2.0, atol=1e-12)
    np.testing.assert_allclose(g.values[..., 1], -0.7, atol=1e-12)


def test_periodic_sine_derivative():
    d = BoxDomain.cube(2, 256, 0.0, 1.0, periodic=True)
    f = Field.from_function(d, lambda x, y: np.sin(2 * np.pi * x))
    X, _ = d.mesh()
    err = np.abs(gradient(f).values[..., 0] - 2 * np.pi * np.cos(2 * np.pi * X)).max()
    assert err < 1e-3


def test_gradient_component_layout():
    d = BoxDomain.cube(2, 11)
    f = Field.from_function(d, lambda x, y: [x, 3 * y])
    g = gradient(f)
    assert g.nu == 4
    # component k * nu + c is d(component c)/d(axis k)
    np.testing.assert_allclose(g.values[..., 0], 1.0, atol=1e-12)
    np.testing.assert_allclose(g.values[..., 3], 3.0, atol=1e-12)
    np.testing.assert_allclose(g.values[..., [1, 2]], 0.0, atol=1e-12)


# ---------------------------------------------------------------- norms

@pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
def test_lp_of_one_is_one(p):
    assert lp_norm(Field.constant(unit_interval(), 1.0), p) == pytest.approx(1.0, abs=1e-14)


def test_lp_of_zero():
    assert lp_norm(Field.constant(unit_interval(), 0.0), 2) == 0.0


def test_lp_of_identity_on_unit_interval():
    d = unit_interval()
    assert lp_norm(Field(d, d.axis(0)), 2) == pytest.approx(1 / math.sqrt(3), abs=1e-3)


def test_w1p_examples():
    d = unit_interval()
    assert w1p_norm(Field.constant(d, 0.0), 2) == 0.0
    c = Field.constant(BoxDomain.cube(2, 9, 0.0, 2.0), -1.5)
    assert w1p_norm(c, 3) == pytest.approx(1.5 * 4.0 ** (1 / 3), rel=1e-13)
    assert w1p_norm(Field(d, d.axis(0)), 2) == pytest.approx(1 / math.sqrt(3) + 1, abs=2e-3)


def test_lp_rejects_infinite_exponent():
    with pytest.raises(ValueError):
        lp_norm(Field.constant(unit_interval(3), 1.0), np.inf)


def test_quadrature_converges_at_least_first_order():
    exact = math.sqrt((math.e ** 2 - 1) / 2)  # ||exp||_2 on [0, 1]
    errs = [abs(lp_norm(Field(unit_interval(N), np.exp(unit_interval(N).axis(0))), 2) - exact)
            for N in (17, 33, 65)]
    assert errs[1] <= errs[0] / 1.9 and errs[2] <= errs[1] / 1.9


def test_cell_derivative_sees_nyquist_sawtooth():
    d = unit_interval(9)
    saw = Field(d, np.array([0, 1, 0, 1, 0, 1, 0, 1, 0], float) / 8)
    assert cell_derivative_lp_norm(saw, 2) == pytest.approx(1.0)
    assert lp_norm(gradient(saw), 2) < 0.5


def test_cell_scheme_matches_central_on_linear_field():
    d = unit_interval(65)
    f = Field(d, 3 * d.axis(0))
    assert w1p_norm(f, 2, scheme="cell") == pytest.approx(w1p_norm(f, 2), rel=1e-12)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(float, (6, 5, 2), elements=finite), st.floats(-50, 50), st.sampled_from([1.0, 2.0, 3.0]))
def test_lp_homogeneity(vals, c, p):
    d = BoxDomain((0.0, 0.0), (1.0, 1.0), (6, 5))
    f = Field(d, vals)
    assert lp_norm(c * f, p) == pytest.approx(abs(c) * lp_norm(f, p), rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(float, (7, 4), elements=finite), hnp.arrays(float, (7, 4), elements=finite),
       st.sampled_from([1.0, 1.5, 2.0, 4.0]))
def test_lp_triangle_inequality(a, b, p):
    d = BoxDomain((0.0, 0.0), (1.0, 2.0), (7, 4), periodic=(True, False))
    f, g = Field(d, a), Field(d, b)
    assert lp_norm(f + g, p) <= lp_norm(f, p) + lp_norm(g, p) + 1e-12 * (1 + lp_norm(f, p) + lp_norm(g, p))


# ---------------------------------------------------------------- Lipschitz estimate

def test_lipschitz_of_constant_is_zero():
    assert lipschitz_estimate(Field.constant(BoxDomain.cube(2, 8), 2.0)) == 0.0


@pytest.mark.parametrize("v", [(3.0, 0.0), (0.0, -2.5), (1.5, 1.5), (-2.0, 2.0)])
def test_lipschitz_of_linear_field(v):
    d = BoxDomain.cube(2, 21)
    f = Field.from_function(d, lambda x, y: v[0] * x + v[1] * y)
    assert lipschitz_estimate(f) == pytest.approx(math.hypot(*v), abs=1e-10)


def test_lipschitz_uses_periodic_wrap():
    d = BoxDomain.cube(1, 8, 0.0, 1.0, periodic=True)
    f = Field(d, d.axis(0))  # jumps from 7/8 back to 0 across the wrap
    assert lipschitz_estimate(f) == pytest.approx(7.0)


# ---------------------------------------------------------------- segment distances

def test_distance_on_segment_is_zero():
    seg = SegmentSet.from_pairs([((0.0, 0.0), (1.0, 0.0))])
    assert point_segment_distance([[0.25, 0.0]], seg)[0] == 0.0


def test_distance_to_interior_foot():
    seg = SegmentSet.from_pairs([((0.0, 0.0), (1.0, 0.0))])
    assert point_segment_distance([[0.5, 0.3]], seg)[0] == pytest.approx(0.3, abs=1e-15)


def test_distance_to_endpoint_and_point_segment():
    seg = SegmentSet.from_pairs([((0.0, 0.0), (1.0, 0.0)), ((5.0, 5.0), (5.0, 5.0))])
    d = point_segment_distance([[2.0, 0.0], [5.0, 6.0]], seg)
    np.testing.assert_allclose(d, [1.0, 1.0])


def test_unit_square_center():
    sq = SegmentSet.from_pairs([((0, 0), (1, 0)), ((1, 0), (1, 1)), ((1, 1), (0, 1)), ((0, 1), (0, 0))])
    assert point_segment_distance([[0.5, 0.5]], sq)[0] == pytest.approx(0.5)


def test_empty_segment_set_is_an_error():
    with pytest.raises(ValueError):
        point_segment_distance([[0.0, 0.0]], SegmentSet.from_pairs([]))


def test_dimension_mismatch_is_an_error():
    seg = SegmentSet.from_pairs([((0.0, 0.0, 0.0), (1.0, 0.0, 0.0))])
    with pytest.raises(ValueError):
        distance_to_segments(BoxDomain.cube(2, 4), seg)


segments = hnp.arrays(float, st.tuples(st.integers(1, 40), st.just(2)), elements=st.floats(-2, 2))


@settings(max_examples=30, deadline=None)
@given(segments, segments, st.integers(4, 40))
def test_accelerated_distance_is_bit_identical(a, b, tile):
    m = min(len(a), len(b))
    seg = SegmentSet(a[:m], b[:m])
    d = BoxDomain.cube(2, 23, -2.5, 2.5)
    pts = d.points()
    fast = point_segment_distance(pts, seg, accelerate=True, tile_size=tile)
    slow = point_segment_distance(pts, seg, accelerate=False)
    assert np.array_equal(fast, slow)


@settings(max_examples=20, deadline=None)
@given(segments, segments)
def test_distance_field_is_one_lipschitz(a, b):
    m = min(len(a), len(b))
    d = BoxDomain((-2.0, -2.0), (2.0, 2.0), (31, 27))
    f = distance_to_segments(d, SegmentSet(a[:m], b[:m]))
    v = f.values[..., 0]
    hx, hy = d.spacing
    assert np.all(np.abs(np.diff(v, axis=0)) <= hx + 1e-12)
    assert np.all(np.abs(np.diff(v, axis=1)) <= hy + 1e-12)


# ---------------------------------------------------------------- traces and polylines

def test_trace_of_zero_field_is_flat():
    d = BoxDomain.cube(2, 9)
    c = trace_line(Field.constant(d, 0.0), axis=1, fixed=[0.3])
    assert np.all(c.points[:, 1] == 0.0)


def test_trace_of_coordinate_has_unit_slope():
    d = BoxDomain.cube(2, 9)
    c = trace_line(Field.from_function(d, lambda x, y: y), axis=1, fixed=[0.5])
    np.testing.assert_allclose(np.diff(c.points[:, 1]) / np.diff(c.points[:, 0]), 1.0)


def test_trace_rejects_bad_axis():
    with pytest.raises(IndexError):
        trace_line(Field.constant(BoxDomain.cube(2, 4), 0.0), axis=2, fixed=[0.0])


def test_polyline_length_examples():
    assert polyline_length(Polyline([[0, 0], [1, 0]])) == 1.0
    saw = Polyline([[0, 0], [1, 1], [2, 0]])
    doubled = Polyline(np.repeat(saw.points, 2, axis=0))
    assert polyline_length(doubled) == polyline_length(saw) == pytest.approx(2 * math.sqrt(2))


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(float, st.tuples(st.integers(2, 12), st.just(3)), elements=st.floats(-10, 10)),
       st.floats(0.0, 1.0), st.integers(0, 10))
def test_polyline_length_invariant_under_insertion(pts, s, j):
    j = j % (len(pts) - 1)
    mid = (1 - s) * pts[j] + s * pts[j + 1]
    longer = np.insert(pts, j + 1, mid, axis=0)
    assert polyline_length(Polyline(longer)) == pytest.approx(polyline_length(Polyline(pts)), rel=1e-12, abs=1e-12)


def test_polyline_needs_two_points():
    with pytest.raises(ValueError):
        Polyline([[0.0, 0.0]])
