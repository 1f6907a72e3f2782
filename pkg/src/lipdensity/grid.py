"""Uniform box grids, grid functions, finite differences, norms and exact
distance transforms.

Everything downstream (maximal functions, truncation, the counterexample
constructions) computes on these objects.  A periodic box plays the role of
a closed manifold; a non-periodic box is used for constructions that live
on a bounded rectangle.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# Absolute tolerance used to decide whether two field values differ.
VALUE_TOL = 1e-12


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box with a uniform node grid.

    On a non-periodic axis the nodes include both end points and
    ``h = (upper - lower) / (nodes - 1)``.  On a periodic axis the upper end
    is identified with the lower one, so the nodes are ``lower + k h`` for
    ``k < nodes`` with ``h = (upper - lower) / nodes``.
    """

    lower: tuple
    upper: tuple
    shape: tuple
    periodic: tuple = None

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        shape = tuple(int(v) for v in np.atleast_1d(self.shape))
        n = len(lower)
        periodic = self.periodic
        if periodic is None:
            periodic = (False,) * n
        elif isinstance(periodic, (bool, np.bool_)):
            periodic = (bool(periodic),) * n
        periodic = tuple(bool(v) for v in periodic)
        if not (len(upper) == len(shape) == len(periodic) == n):
            raise ValueError("lower, upper, shape and periodic must have equal length")
        if not 1 <= n <= 4:
            raise ValueError(f"dimension {n} not supported (1..4)")
        if any(s < 2 for s in shape):
            raise ValueError("need at least 2 nodes per axis")
        if any(u <= l for l, u in zip(lower, upper)):
            raise ValueError("upper corner must exceed lower corner on every axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "periodic", periodic)

    @classmethod
    def cube(cls, n, nodes, lower=0.0, upper=1.0, periodic=False):
        return cls((lower,) * n, (upper,) * n, (nodes,) * n, (periodic,) * n)

    @property
    def n(self) -> int:
        return len(self.shape)

    @property
    def lengths(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    @property
    def spacing(self) -> np.ndarray:
        div = np.array([s if p else s - 1 for s, p in zip(self.shape, self.periodic)], float)
        return self.lengths / div

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def axis(self, k: int) -> np.ndarray:
        return self.lower[k] + self.spacing[k] * np.arange(self.shape[k])

    def axes(self) -> list:
        return [self.axis(k) for k in range(self.n)]

    def mesh(self) -> tuple:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(size, n)`` in C order."""
        return np.stack([c.ravel() for c in self.mesh()], axis=-1)

    def weights(self) -> np.ndarray:
        """Trapezoidal node weights; they sum to the box volume."""
        w = np.ones(self.shape)
        for k in range(self.n):
            wk = np.full(self.shape[k], self.spacing[k])
            if not self.periodic[k]:
                wk[0] *= 0.5
                wk[-1] *= 0.5
            sh = [1] * self.n
            sh[k] = -1
            w = w * wk.reshape(sh)
        return w

    def displacement(self, a, b) -> np.ndarray:
        """``b - a`` with the minimum-image convention on periodic axes."""
        d = np.asarray(b, float) - np.asarray(a, float)
        for k in range(self.n):
            if self.periodic[k]:
                L = self.lengths[k]
                d[..., k] -= L * np.round(d[..., k] / L)
        return d

    def distance(self, a, b) -> np.ndarray:
        return np.sqrt(np.sum(self.displacement(a, b) ** 2, axis=-1))

    def kdtree_frame(self):
        """Shifted coordinates and ``boxsize`` for ``scipy.spatial.cKDTree``.

        Non-periodic axes get a box four times their length, which never
        wraps for points inside the domain.
        """
        box = np.where(self.periodic, self.lengths, 4.0 * self.lengths)
        pts = self.points() - np.asarray(self.lower)
        # rounding can push the last periodic node onto the box edge
        pts = np.minimum(pts, np.nextafter(box, 0))
        return pts, box

    def snap(self, coords) -> tuple:
        """Index of the node nearest to ``coords``."""
        idx = []
        for k, c in enumerate(coords):
            i = int(np.rint((c - self.lower[k]) / self.spacing[k]))
            if self.periodic[k]:
                i %= self.shape[k]
            idx.append(min(max(i, 0), self.shape[k] - 1))
        return tuple(idx)

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper),
                "shape": list(self.shape), "periodic": list(self.periodic)}


class Field:
    """Grid function with ``nu`` components per node.

    ``values`` has shape ``domain.shape + (nu,)`` and is stored read-only.
    """

    def __init__(self, domain: BoxDomain, values):
        if isinstance(values, (list, tuple)):
            values = np.stack([np.asarray(c, float) for c in values], axis=-1)
        values = np.array(values, dtype=float)
        if values.shape == domain.shape:
            values = values[..., None]
        if values.ndim != domain.n + 1 or values.shape[:-1] != domain.shape:
            raise ValueError(f"values of shape {values.shape} do not fit grid {domain.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        self.domain = domain
        self.values = values

    @classmethod
    def from_function(cls, domain: BoxDomain, fn: Callable) -> "Field":
        """Evaluate ``fn(*mesh)``; it may return one array or a list of components."""
        out = fn(*domain.mesh())
        if isinstance(out, (list, tuple)):
            out = np.stack([np.broadcast_to(np.asarray(c, float), domain.shape) for c in out], -1)
        else:
            out = np.broadcast_to(np.asarray(out, float), domain.shape)
        return cls(domain, out)

    @classmethod
    def constant(cls, domain: BoxDomain, value) -> "Field":
        value = np.atleast_1d(np.asarray(value, float))
        return cls(domain, np.broadcast_to(value, domain.shape + value.shape).copy())

    @property
    def nu(self) -> int:
        return self.values.shape[-1]

    def component(self, c: int) -> "Field":
        return Field(self.domain, self.values[..., c])

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean norm over components."""
        if self.nu == 1:
            return np.abs(self.values[..., 0])
        return np.sqrt(np.sum(self.values ** 2, axis=-1))

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1, self.nu)

    def _combine(self, other, op):
        if isinstance(other, Field):
            if other.domain != self.domain:
                raise ValueError("fields live on different domains")
            other = other.values
        return Field(self.domain, op(self.values, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        return self._combine(c, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.domain, -self.values)

    def __repr__(self):
        return f"Field(shape={self.domain.shape}, nu={self.nu})"


@dataclass(frozen=True)
class SegmentSet:
    """Finite union of closed segments ``[a_j, b_j]`` in R^d."""

    starts: np.ndarray
    ends: np.ndarray

    def __post_init__(self):
        a = np.array(self.starts, float, ndmin=2)
        b = np.array(self.ends, float, ndmin=2)
        if a.shape != b.shape:
            raise ValueError("segment start/end arrays differ in shape")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("segment endpoints must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "starts", a)
        object.__setattr__(self, "ends", b)

    @classmethod
    def from_pairs(cls, pairs) -> "SegmentSet":
        pairs = list(pairs)
        if not pairs:
            return cls(np.zeros((0, 2)), np.zeros((0, 2)))
        return cls(np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))

    @property
    def dim(self) -> int:
        return self.starts.shape[1]

    def __len__(self):
        return self.starts.shape[0]

    def __add__(self, other: "SegmentSet") -> "SegmentSet":
        return SegmentSet(np.vstack([self.starts, other.starts]), np.vstack([self.ends, other.ends]))


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, float)
        if p.ndim != 2 or p.shape[0] < 2:
            raise ValueError("a polyline needs at least two points")
        if not np.all(np.isfinite(p)):
            raise ValueError("polyline coordinates must be finite")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)


# --------------------------------------------------------------------------
# derivatives and norms

def _diff_axis(v: np.ndarray, k: int, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(v, -1, axis=k) - np.roll(v, 1, axis=k)) / (2.0 * h)
    return np.gradient(v, h, axis=k, edge_order=1)


def gradient(f: Field) -> Field:
    """Finite-difference gradient with ``n * nu`` components.

    Component ``k * nu + c`` is the derivative of component ``c`` along axis
    ``k``.  Central differences in the interior, first-order one-sided at
    non-periodic boundaries, wrap-around on periodic axes.
    """
    d = f.domain
    parts = []
    for k in range(d.n):
        parts.append(_diff_axis(f.values, k, d.spacing[k], d.periodic[k]))
    return Field(d, np.concatenate(parts, axis=-1))


def gradient_magnitude(f: Field) -> Field:
    """Scalar field ``|grad f|`` (Frobenius norm over all components)."""
    return Field(f.domain, gradient(f).magnitude())


def lp_norm(f: Field, p: float) -> float:
    if not (1 <= p < np.inf):
        raise ValueError("p must be finite and >= 1")
    w = f.domain.weights()
    return float(np.sum(w * f.magnitude() ** p) ** (1.0 / p))


def cell_derivative_lp_norm(f: Field, p: float) -> float:
    """Exact ``L^p`` norm of the derivative of the piecewise-linear
    interpolant of a 1D field.

    Central differences annihilate oscillations at the grid Nyquist
    frequency (a sawtooth whose kinks sit on nodes has zero central
    difference everywhere); cell slopes do not.
    """
    d = f.domain
    if d.n != 1:
        raise ValueError("cell derivative norm is one-dimensional")
    v = f.values
    if d.periodic[0]:
        v = np.concatenate([v, v[:1]], axis=0)
    slopes = np.diff(v, axis=0) / d.spacing[0]
    mag = np.sqrt(np.sum(slopes ** 2, axis=-1))
    return float((d.spacing[0] * np.sum(mag ** p)) ** (1.0 / p))


def w1p_norm(f: Field, p: float, scheme: str = "central") -> float:
    """``||f||_p + ||grad f||_p``.

    ``scheme="cell"`` (1D only) uses the piecewise-linear derivative.
    """
    if scheme == "central":
        return lp_norm(f, p) + lp_norm(gradient(f), p)
    if scheme == "cell":
        return lp_norm(f, p) + cell_derivative_lp_norm(f, p)
    raise ValueError(f"unknown derivative scheme {scheme!r}")


def lipschitz_estimate(f: Field) -> float:
    """Largest difference quotient over neighbouring node pairs.

    Neighbours are all nodes of the surrounding ``3^n`` block (axis and
    diagonal steps), with wrap-around on periodic axes.  Exact for linear
    fields whose slope points along one of these stencil directions.
    """
    d = f.domain
    v = f.values
    best = 0.0
    for step in _half_stencil(d.n):
        a, b = _shifted_pair(v, step, d.periodic)
        if a.size == 0:
            continue
        dist = float(np.sqrt(np.sum((np.asarray(step) * d.spacing) ** 2)))
        diff = np.sqrt(np.sum((a - b) ** 2, axis=-1))
        best = max(best, float(diff.max()) / dist)
    return best


def _half_stencil(n: int):
    """One representative of each +/- pair of nonzero offsets in {-1,0,1}^n."""
    out = []
    for step in np.ndindex(*(3,) * n):
        s = tuple(int(c) - 1 for c in step)
        if any(s) and s > tuple(-c for c in s):
            out.append(s)
    return out


def _shifted_pair(v: np.ndarray, step, periodic):
    """Arrays ``v[x]`` and ``v[x + step]`` over all valid ``x``."""
    a, b = v, v
    for k, s in enumerate(step):
        if s == 0:
            continue
        if periodic[k]:
            b = np.roll(b, -s, axis=k)
        else:
            n = v.shape[k]
            sl_a = [slice(None)] * v.ndim
            sl_b = [slice(None)] * v.ndim
            sl_a[k] = slice(max(0, -s), n - max(0, s))
            sl_b[k] = slice(max(0, s), n - max(0, -s))
            a, b = a[tuple(sl_a)], b[tuple(sl_b)]
    return a, b


# --------------------------------------------------------------------------
# distance to a union of segments

def _segment_sqdist(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared distances, shape ``(len(p), len(a))``.

    Coordinate sums are written out so the result for a given
    point/segment pair does not depend on array shapes.
    """
    d = p.shape[1]
    ab = [b[:, k] - a[:, k] for k in range(d)]
    ap = [p[:, None, k] - a[None, :, k] for k in range(d)]
    den = ab[0] * ab[0]
    for k in range(1, d):
        den = den + ab[k] * ab[k]
    num = ap[0] * ab[0]
    for k in range(1, d):
        num = num + ap[k] * ab[k]
    safe = np.where(den > 0, den, 1.0)
    t = np.where(den > 0, np.clip(num / safe, 0.0, 1.0), 0.0)
    r = ap[0] - t * ab[0]
    out = r * r
    for k in range(1, d):
        rk = ap[k] - t * ab[k]
        out = out + rk * rk
    return out


def point_segment_distance(points, segments: SegmentSet, accelerate: bool = True,
                           tile_size: int = 64) -> np.ndarray:
    """Exact Euclidean distance from each point to the nearest segment.

    With ``accelerate`` the points are grouped into spatial tiles and, per
    tile, segments that provably cannot be nearest are discarded before the
    exact evaluation.  The nearest segment always survives the pruning and
    the minimum of floats is order independent, so both paths return
    bit-identical results.
    """
    pts = np.asarray(points, float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if len(segments) == 0:
        raise ValueError("distance to an empty segment set is undefined")
    if pts.shape[1] != segments.dim:
        raise ValueError("point and segment dimensions differ")
    a, b = segments.starts, segments.ends
    out = np.empty(len(pts))
    if not accelerate or len(segments) <= 32:
        seg_chunk = max(1, (1 << 22) // max(len(segments), 1))
        for i in range(0, len(pts), seg_chunk):
            out[i:i + seg_chunk] = _segment_sqdist(pts[i:i + seg_chunk], a, b).min(axis=1)
        return np.sqrt(out)

    tiles = _tile_points(pts, tile_size)
    for idx in tiles:
        tp = pts[idx]
        lo, hi = tp.min(axis=0), tp.max(axis=0)
        c = 0.5 * (lo + hi)
        rad = 0.5 * float(np.sqrt(np.sum((hi - lo) ** 2)))
        dc = np.sqrt(_segment_sqdist(c[None, :], a, b)[0])
        slack = 1e-9 * (1.0 + float(dc.min()) + rad)
        keep = dc - rad <= dc.min() + rad + slack
        out[idx] = _segment_sqdist(tp, a[keep], b[keep]).min(axis=1)
    return np.sqrt(out)


def _tile_points(pts: np.ndarray, target: int) -> list:
    """Split points into spatially compact groups of roughly ``target`` points."""
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-300)
    ntiles = max(1, len(pts) // max(target, 1))
    per_axis = max(1, int(round(ntiles ** (1.0 / pts.shape[1]))))
    cell = np.minimum(((pts - lo) / span * per_axis).astype(int), per_axis - 1)
    key = np.ravel_multi_index(tuple(cell.T), (per_axis,) * pts.shape[1])
    order = np.argsort(key, kind="stable")
    bounds = np.flatnonzero(np.diff(key[order])) + 1
    return np.split(order, bounds)


def distance_to_segments(domain: BoxDomain, segments: SegmentSet, accelerate: bool = True) -> Field:
    """Exact distance from every node of ``domain`` to a segment set."""
    if segments.dim != domain.n:
        raise ValueError("segment dimension must equal domain dimension")
    dist = point_segment_distance(domain.points(), segments, accelerate=accelerate)
    return Field(domain, dist.reshape(domain.shape))


# --------------------------------------------------------------------------
# curves

def trace_line(f: Field, axis: int, fixed: Sequence[float] = ()) -> Polyline:
    """Graph of ``f`` along one grid line.

    ``fixed`` lists the coordinates of the remaining axes in order; they are
    snapped to the nearest grid line.  Points are ``(t, f_1, ..., f_nu)``.
    """
    d = f.domain
    if not 0 <= axis < d.n:
        raise IndexError(f"axis {axis} out of range for a {d.n}-dimensional domain")
    fixed = list(fixed)
    if len(fixed) != d.n - 1:
        raise ValueError(f"need {d.n - 1} fixed coordinates")
    full = fixed[:axis] + [d.lower[axis]] + fixed[axis:]
    idx = list(d.snap(full))
    idx[axis] = slice(None)
    vals = f.values[tuple(idx)]
    return Polyline(np.column_stack([d.axis(axis), vals]))


def polyline_length(c: Polyline) -> float:
    steps = np.diff(c.points, axis=0)
    return float(np.sum(np.sqrt(np.sum(steps ** 2, axis=1))))
