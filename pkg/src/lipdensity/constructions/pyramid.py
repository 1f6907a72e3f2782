"""The pyramid function on ``[0, 2] x [0, 1]`` and the comb curves along
which composition with it is discontinuous in ``W^{1,p}``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import BoxDomain, Field, SegmentSet, cell_derivative_lp_norm, lp_norm, \
    point_segment_distance, w1p_norm


def a(i: int) -> float:
    """Abscissa ``2 - 2^(1-i)`` of the ``i``-th vertical segment (exact in binary)."""
    return 2.0 - 2.0 ** (1 - i)


@dataclass(frozen=True)
class PyramidSpec:
    """Square grid skeleton truncated after column ``imax``.

    Column ``i`` is the strip ``[a_i, a_{i+1}] x [0, 1]`` cut into ``2^i``
    squares of side ``2^-i``.  Besides the vertical segments ``I_0..I_{imax+1}``
    and the horizontals ``J_{i,k}`` for ``i <= imax``, the skeleton keeps the
    limit line ``x = 2`` and the bottom and top edges of the unbuilt tail
    ``[a_{imax+1}, 2]``, both of which are subsets of the full set.
    """

    imax: int

    def __post_init__(self):
        if self.imax < 0:
            raise ValueError("imax must be nonnegative")

    def segments(self) -> SegmentSet:
        pairs = []
        for i in range(self.imax + 2):
            pairs.append(((a(i), 0.0), (a(i), 1.0)))
        pairs.append(((2.0, 0.0), (2.0, 1.0)))
        for i in range(self.imax + 1):
            for k in range(2 ** i + 1):
                y = k / 2.0 ** i
                pairs.append(((a(i), y), (a(i + 1), y)))
        tail = a(self.imax + 1)
        pairs.append(((tail, 0.0), (2.0, 0.0)))
        pairs.append(((tail, 1.0), (2.0, 1.0)))
        return SegmentSet.from_pairs(pairs)


def pyramid_values(spec: PyramidSpec, points) -> np.ndarray:
    """``dist(x, K)`` inside the strip, 0 outside."""
    pts = np.atleast_2d(np.asarray(points, float))
    out = point_segment_distance(pts, spec.segments())
    inside = (pts[:, 0] >= 0) & (pts[:, 0] <= 2) & (pts[:, 1] >= 0) & (pts[:, 1] <= 1)
    return np.where(inside, out, 0.0)


def pyramid_field(spec: PyramidSpec, domain: BoxDomain) -> Field:
    if domain.n != 2:
        raise ValueError("the pyramid function lives in the plane")
    lo, hi = np.asarray(domain.lower), np.asarray(domain.upper)
    if lo[0] > 0 or lo[1] > 0 or hi[0] < 2 or hi[1] < 1:
        raise ValueError("domain must cover [0, 2] x [0, 1]")
    vals = pyramid_values(spec, domain.points())
    return Field(domain, vals.reshape(domain.shape))


def comb_curve(i: int, resolution: int):
    """The curve ``u_i(x) = ((a_i + a_{i+1}) / 2, x)`` and its limit ``u(x) = (2, x)``
    as vector fields on ``[0, 1]`` with ``resolution`` cells."""
    if i < 0:
        raise ValueError("i must be nonnegative")
    dom = BoxDomain((0.0,), (1.0,), (resolution + 1,))
    x = dom.axis(0)
    mid = 0.5 * (a(i) + a(i + 1))
    ui = Field(dom, [np.full_like(x, mid), x])
    u = Field(dom, [np.full_like(x, 2.0), x])
    return ui, u


def compose(spec: PyramidSpec, curve: Field) -> Field:
    """``phi o curve`` sampled at the curve's nodes."""
    return Field(curve.domain, pyramid_values(spec, curve.flat()))


COMPOSITION_COLUMNS = ["i", "curve_gap_w1p", "composition_gap_w1p", "derivative_lp"]


def composition_experiment(p: float, i_range, resolution: int = 2048, imax=None) -> list:
    """Rows ``(i, ||u_i - u||_{1,p}, ||phi o u_i - phi o u||_{1,p}, ||(phi o u_i)'||_p)``.

    Derivatives of the sampled compositions are taken cellwise (exact for
    the piecewise-linear interpolant); with a dyadic ``resolution`` the
    kinks of ``phi o u_i`` fall on nodes.
    """
    i_range = list(i_range)
    if imax is None:
        imax = max(i_range) + 2
    if imax < max(i_range) + 2:
        raise ValueError("pyramid depth must exceed the largest comb index by 2")
    spec = PyramidSpec(imax)
    rows = []
    for i in i_range:
        ui, u = comb_curve(i, resolution)
        fi, f = compose(spec, ui), compose(spec, u)
        rows.append({
            "i": i,
            "curve_gap_w1p": w1p_norm(ui - u, p, scheme="cell"),
            "composition_gap_w1p": w1p_norm(fi - f, p, scheme="cell"),
            "derivative_lp": cell_derivative_lp_norm(fi, p),
            "sup_gap": float(np.max(np.abs((ui - u).values))),
            "composition_limit_lp": lp_norm(f, p),
        })
    return rows
