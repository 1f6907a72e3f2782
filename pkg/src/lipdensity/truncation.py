"""Lipschitz truncation of Sobolev maps.

``truncate`` keeps ``u`` on the good set ``E_t = {M|grad u| <= t}`` and
replaces it on the complement by ``sum_i phi_i(x) u_{B_i}``, the partition
of unity applied to ball averages over a Whitney cover.  Composing with a
retraction brings the values back onto the target.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .grid import VALUE_TOL, Field, SegmentSet, gradient_magnitude, lipschitz_estimate, \
    point_segment_distance, w1p_norm
from .maximal import GoodSetMask, WhitneyCover, maximal_function, partition_of_unity, \
    whitney_cover

__all__ = [
    "SphereTarget", "PointCloudTarget", "SegmentTarget", "graph_target",
    "TruncationResult", "truncate", "lipschitz_estimate", "distance_to_target",
    "retract", "approximation_sweep", "SWEEP_COLUMNS",
]


class SphereTarget:
    """Sphere of radius ``radius`` about ``center`` in R^nu."""

    kind = "sphere"

    def __init__(self, nu: int = 2, radius: float = 1.0, center=None):
        self.nu = nu
        self.radius = float(radius)
        self.center = np.zeros(nu) if center is None else np.asarray(center, float)

    def distance(self, values: np.ndarray) -> np.ndarray:
        return np.abs(np.linalg.norm(values - self.center, axis=-1) - self.radius)

    def project(self, values: np.ndarray, min_norm: float = 1e-6) -> np.ndarray:
        v = values - self.center
        nrm = np.linalg.norm(v, axis=-1)
        bad = np.flatnonzero(nrm.ravel() <= min_norm)
        if bad.size:
            raise ValueError(f"value at node {int(bad[0])} lies within {min_norm} of the "
                             "sphere center; outside the retraction neighbourhood")
        return self.center + self.radius * v / nrm[..., None]


class PointCloudTarget:
    """Finite point set; the retraction is the nearest-point map."""

    kind = "points"

    def __init__(self, points):
        self.points = np.asarray(points, float)
        self._tree = cKDTree(self.points)

    def distance(self, values: np.ndarray) -> np.ndarray:
        d, _ = self._tree.query(values.reshape(-1, values.shape[-1]))
        return d.reshape(values.shape[:-1])

    def project(self, values: np.ndarray) -> np.ndarray:
        _, i = self._tree.query(values.reshape(-1, values.shape[-1]))
        return self.points[i].reshape(values.shape)


class SegmentTarget:
    """Union of segments (distance only)."""

    kind = "segments"

    def __init__(self, segments: SegmentSet):
        self.segments = segments

    def distance(self, values: np.ndarray) -> np.ndarray:
        flat = values.reshape(-1, values.shape[-1])
        return point_segment_distance(flat, self.segments).reshape(values.shape[:-1])


def graph_target(height, lower, upper, spacing: float) -> PointCloudTarget:
    """Sampled graph ``{(x, height(x))}`` over a box, as a point cloud."""
    lower = np.atleast_1d(np.asarray(lower, float))
    upper = np.atleast_1d(np.asarray(upper, float))
    axes = [np.arange(lo, hi + 0.5 * spacing, spacing) for lo, hi in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    x = np.stack([m.ravel() for m in mesh], -1)
    return PointCloudTarget(np.column_stack([x, height(x)]))


def distance_to_target(f: Field, target) -> float:
    """``sup_x dist(f(x), X)`` over the nodes."""
    return float(np.max(target.distance(f.values)))


def retract(f: Field, target) -> Field:
    return Field(f.domain, target.project(f.values))


@dataclass
class TruncationResult:
    u_t: Field
    t: float
    disagreement: float
    lipschitz: float
    sup_dist: float | None
    good: GoodSetMask
    cover: WhitneyCover | None
    cover_stats: dict = field(default_factory=dict)
    disagreement_mask: np.ndarray | None = None


def truncate(u: Field, t: float, radii=None, maximal: Field | None = None,
             target=None) -> TruncationResult:
    """Lipschitz truncation ``u_t`` of ``u`` at level ``t``.

    ``maximal`` may carry a precomputed ``M|grad u|`` (it is reused by
    sweeps); otherwise it is computed from ``radii``.  Vector fields share
    one cover built from the Frobenius norm of the full gradient.
    """
    if t <= 0:
        raise ValueError("threshold must be positive")
    d = u.domain
    if maximal is None:
        if radii is None:
            raise ValueError("need radii or a precomputed maximal function")
        maximal = maximal_function(gradient_magnitude(u), radii)
    good = GoodSetMask.from_maximal(maximal, t)
    if not good.mask.any():
        raise ValueError(f"good set is empty at t={t}; threshold too small for this field")

    cover = None
    stats = {"balls": 0}
    if good.mask.all():
        ut = u
    else:
        cover = whitney_cover(good)
        stats = dict(cover.stats)
        pu = partition_of_unity(cover)
        averages = ball_averages(u, cover)
        vals = np.array(u.values)
        flat = vals.reshape(-1, u.nu)
        comp = cover.complement
        flat[comp] = pu.matrix[comp] @ averages
        ut = Field(d, vals)

    diff = np.max(np.abs(ut.values - u.values), axis=-1) > VALUE_TOL
    res = TruncationResult(
        u_t=ut, t=float(t),
        disagreement=d.cell_volume * int(np.count_nonzero(diff)),
        lipschitz=lipschitz_estimate(ut),
        sup_dist=None if target is None else distance_to_target(ut, target),
        good=good, cover=cover, cover_stats=stats, disagreement_mask=diff)
    return res


def ball_averages(u: Field, cover: WhitneyCover) -> np.ndarray:
    """Quadrature-weighted averages of ``u`` over each open ball ``B(x_i, r_i)``."""
    d = u.domain
    pts, box = d.kdtree_frame()
    comp = cover.complement
    tree = cKDTree(pts[comp], boxsize=box)
    w = d.weights().ravel()
    vals = u.flat()
    out = np.empty((len(cover), u.nu))
    for i, (c, r) in enumerate(zip(cover.centers, cover.radii)):
        idx = tree.query_ball_point(pts[c], r * (1 - 1e-12))
        nodes = comp[np.asarray(idx, dtype=np.int64)] if idx else np.array([c])
        wi = w[nodes]
        out[i] = (wi[:, None] * vals[nodes]).sum(axis=0) / wi.sum()
    return out


SWEEP_COLUMNS = ["t", "disagreement", "t^n*disagreement", "lip", "lip/t",
                 "sup_dist", "retract_error_w1n", "status"]


def approximation_sweep(u: Field, target, t_list, radii) -> list:
    """One row per threshold with the quantities behind properties (A)-(C).

    ``retract_error_w1n`` is ``||p(u_t) - u||_{1,n}`` with ``n`` the domain
    dimension.  A row whose truncation or retraction fails carries the error
    message in ``status``.
    """
    t_list = [float(t) for t in t_list]
    if any(b <= a for a, b in zip(t_list, t_list[1:])):
        raise ValueError("thresholds must be increasing")
    if not t_list:
        return []
    n = u.domain.n
    maximal = maximal_function(gradient_magnitude(u), radii)
    rows = []
    for t in t_list:
        row = {"t": t}
        try:
            res = truncate(u, t, maximal=maximal, target=target)
            row.update({
                "disagreement": res.disagreement,
                "t^n*disagreement": t ** n * res.disagreement,
                "lip": res.lipschitz,
                "lip/t": res.lipschitz / t,
                "sup_dist": res.sup_dist,
            })
            if hasattr(target, "project"):
                row["retract_error_w1n"] = w1p_norm(retract(res.u_t, target) - u, n)
            row["status"] = "ok"
        except (ValueError, RuntimeError) as exc:
            row["status"] = f"failed: {exc}"
        rows.append(row)
    return rows
