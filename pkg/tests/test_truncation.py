import numpy as np
import pytest

from lipdensity.constructions.capacity import circle_loglog_field, loglog_field
from lipdensity.grid import BoxDomain, Field, SegmentSet, gradient_magnitude
from lipdensity.maximal import dyadic_radii, maximal_function, partition_of_unity
from lipdensity.truncation import (SWEEP_COLUMNS, PointCloudTarget, SegmentTarget, SphereTarget,
                                   approximation_sweep, ball_averages, distance_to_target,
                                   graph_target, retract, truncate)

T_LIST = [2.0, 4.0, 8.0, 16.0, 32.0]


def smooth_circle_map(nodes=64):
    d = BoxDomain.cube(2, nodes, -0.5, 0.5, periodic=True)
    X, Y = d.mesh()
    th = 0.5 * np.sin(2 * np.pi * X) * np.cos(2 * np.pi * Y)
    return Field(d, [np.cos(th), np.sin(th)])


@pytest.fixture(scope="module")
def loglog_sweep():
    d = BoxDomain.cube(2, 256, -0.5, 0.5, periodic=True)
    u = circle_loglog_field(d)
    radii = dyadic_radii(d)
    return u, radii, approximation_sweep(u, SphereTarget(2), T_LIST, radii)


# ---------------------------------------------------------------- truncate

def test_smooth_map_below_threshold_is_unchanged():
    u = smooth_circle_map()
    radii = dyadic_radii(u.domain)
    bound = maximal_function(gradient_magnitude(u), radii).values.max()
    res = truncate(u, float(bound) * 1.01, radii)
    assert res.good.mask.all()
    assert res.disagreement == 0
    np.testing.assert_array_equal(res.u_t.values, u.values)


def test_truncation_copies_u_on_the_good_set_bit_exactly():
    d = BoxDomain.cube(2, 128, -0.5, 0.5, periodic=True)
    u = circle_loglog_field(d)
    res = truncate(u, 4.0, dyadic_radii(d))
    m = res.good.mask
    assert (~m).any()
    assert np.array_equal(res.u_t.values[m], u.values[m])
    assert not np.any(res.disagreement_mask & m)


def test_truncated_values_lie_in_hull_of_ball_averages():
    d = BoxDomain.cube(2, 96, -0.5, 0.5, periodic=True)
    u = loglog_field(d)
    res = truncate(u, 4.0, dyadic_radii(d))
    avg = ball_averages(u, res.cover)[:, 0]
    pu = partition_of_unity(res.cover).matrix.tocsr()
    vals = res.u_t.flat()[:, 0]
    for node in res.cover.complement:
        row = pu.getrow(node)
        active = avg[row.indices]
        assert active.min() - 1e-12 <= vals[node] <= active.max() + 1e-12


def test_empty_good_set_raises():
    u = smooth_circle_map()
    with pytest.raises(ValueError, match="good set is empty"):
        truncate(u, 1e-9, dyadic_radii(u.domain))


def test_truncate_rejects_non_positive_threshold_and_missing_radii():
    u = smooth_circle_map()
    with pytest.raises(ValueError):
        truncate(u, 0.0, dyadic_radii(u.domain))
    with pytest.raises(ValueError):
        truncate(u, 1.0)


# ---------------------------------------------------------------- targets

def test_sphere_distance_examples():
    d = BoxDomain.cube(2, 8)
    target = SphereTarget(2)
    assert distance_to_target(Field(d, [np.zeros(d.shape), np.zeros(d.shape)]), target) == 1.0
    X, _ = d.mesh()
    on = Field(d, [np.cos(X), np.sin(X)])
    assert distance_to_target(on, target) < 1e-15


def test_retract_examples():
    d = BoxDomain.cube(1, 3)
    f = Field(d, [np.array([2.0, 0.0, 0.6]), np.array([0.0, 1.0, 0.8])])
    r = retract(f, SphereTarget(2))
    np.testing.assert_allclose(r.flat(), [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]], atol=1e-15)
    np.testing.assert_array_equal(r.flat()[1], [0.0, 1.0])


def test_retract_near_center_names_the_node():
    d = BoxDomain.cube(1, 3)
    f = Field(d, [np.array([1.0, 1e-8, 0.0]), np.zeros(3)])
    with pytest.raises(ValueError, match="node 1"):
        retract(f, SphereTarget(2))


def test_point_cloud_and_segment_targets():
    cloud = PointCloudTarget([[0.0, 0.0], [1.0, 0.0]])
    np.testing.assert_allclose(cloud.distance(np.array([[0.5, 0.5], [1.0, 2.0]])), [np.sqrt(0.5), 2.0])
    np.testing.assert_array_equal(cloud.project(np.array([[0.9, 0.1]])), [[1.0, 0.0]])
    seg = SegmentTarget(SegmentSet.from_pairs([((0.0, 0.0), (1.0, 0.0))]))
    assert seg.distance(np.array([[0.5, 0.3]]))[0] == pytest.approx(0.3)
    graph = graph_target(lambda x: x[:, 0] ** 2, [0.0], [1.0], 0.25)
    assert graph.distance(np.array([[0.5, 0.25]]))[0] == 0.0


# ---------------------------------------------------------------- sweeps

def test_empty_sweep_is_empty():
    u = smooth_circle_map(16)
    assert approximation_sweep(u, SphereTarget(2), [], dyadic_radii(u.domain)) == []


def test_sweep_requires_increasing_thresholds():
    u = smooth_circle_map(16)
    with pytest.raises(ValueError):
        approximation_sweep(u, SphereTarget(2), [4.0, 2.0], dyadic_radii(u.domain))


def test_sweep_of_smooth_map_has_zero_disagreement():
    u = smooth_circle_map()
    rows = approximation_sweep(u, SphereTarget(2), [8.0, 16.0, 32.0], dyadic_radii(u.domain))
    assert [r["disagreement"] for r in rows] == [0.0, 0.0, 0.0]
    assert all(r["status"] == "ok" for r in rows)
    assert set(rows[0]) <= set(SWEEP_COLUMNS)


def test_sweep_marks_failed_rows():
    u = smooth_circle_map(16)
    rows = approximation_sweep(u, SphereTarget(2), [1e-9, 100.0], dyadic_radii(u.domain))
    assert rows[0]["status"].startswith("failed")
    assert rows[1]["status"] == "ok"


def test_loglog_sweep_disagreement_scaled_by_t_squared_is_non_increasing(loglog_sweep):
    _, _, rows = loglog_sweep
    vals = [r["t^n*disagreement"] for r in rows]
    assert all(r["status"] == "ok" for r in rows)
    assert all(b <= a for a, b in zip(vals, vals[1:])), vals


def test_loglog_sweep_lipschitz_over_t_is_bounded(loglog_sweep):
    _, _, rows = loglog_sweep
    lt = [r["lip/t"] for r in rows]
    assert max(lt) / min(lt) <= 3.0


def test_loglog_sweep_distance_and_retraction_error_non_increasing(loglog_sweep):
    _, _, rows = loglog_sweep
    for col in ("sup_dist", "retract_error_w1n"):
        vals = [r[col] for r in rows]
        assert all(b <= a for a, b in zip(vals, vals[1:])), (col, vals)


def test_loglog_sweep_agrees_with_u_on_good_sets(loglog_sweep):
    u, radii, _ = loglog_sweep
    M = maximal_function(gradient_magnitude(u), radii)
    for t in T_LIST:
        res = truncate(u, t, maximal=M)
        m = res.good.mask
        assert np.array_equal(res.u_t.values[m], u.values[m])
