"""Restricted Hardy-Littlewood maximal function, good sets, Whitney ball
covers of their complements and the subordinated tent partition of unity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .grid import BoxDomain, Field, gradient_magnitude

# relative slack for open-ball membership and distance inequalities
_REL = 1e-12


class WhitneyCoverError(RuntimeError):
    """A constructed cover violates one of its defining properties."""


def dyadic_radii(domain: BoxDomain) -> list:
    """Radii ``h, 2h, 4h, ...`` up to half the domain diameter.

    On a periodic axis the cap is half the period, so that no discrete ball
    wraps onto itself.
    """
    h = float(domain.spacing.min())
    caps = [0.5 * L if p else float(np.sqrt(np.sum(domain.lengths ** 2))) / 2
            for L, p in zip(domain.lengths, domain.periodic)]
    rmax = min(caps)
    radii = []
    r = h
    while r <= rmax * (1 + _REL):
        radii.append(r)
        r *= 2.0
    return radii


def ball_offsets(domain: BoxDomain, r: float) -> np.ndarray:
    """Integer offsets ``o`` with ``|o * h| < r`` (open ball)."""
    h = domain.spacing
    ext = [int(np.ceil(r / hk)) for hk in h]
    grids = np.meshgrid(*[np.arange(-e, e + 1) for e in ext], indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=-1)
    d2 = np.sum((offs * h) ** 2, axis=1)
    return offs[d2 < r * r * (1 - _REL)]


class _BallAverager:
    """Weighted discrete ball averages of a fixed scalar array for many radii.

    Periodic axes use circular convolution; non-periodic axes are zero
    padded, which averages over the clipped intersection ``B(x, r)`` with
    the box.
    """

    def __init__(self, domain: BoxDomain, values: np.ndarray):
        self.domain = domain
        self.values = values
        self.w = domain.weights()
        self._pad = None
        self._num_hat = None
        self._den_hat = None

    def _prepare(self, pad):
        d = self.domain
        self._pad = pad
        shape = tuple(s + (0 if p else pk) for s, p, pk in zip(d.shape, d.periodic, pad))
        self._fshape = shape
        self._num_hat = sfft.rfftn(self.w * self.values, s=shape)
        self._den_hat = sfft.rfftn(self.w, s=shape)

    def average(self, r: float) -> np.ndarray:
        d = self.domain
        offs = ball_offsets(d, r)
        if len(offs) == 1:
            return self.values.copy()
        for k in range(d.n):
            if d.periodic[k] and 2 * np.abs(offs[:, k]).max() >= d.shape[k]:
                raise ValueError(f"radius {r} wraps around periodic axis {k}")
        pad = tuple(int(np.abs(offs[:, k]).max()) for k in range(d.n))
        if self._pad is None or any(p > q for p, q in zip(pad, self._pad)):
            self._prepare(pad)
        kern = np.zeros(self._fshape)
        idx = tuple((offs[:, k] % self._fshape[k]) for k in range(d.n))
        kern[idx] = 1.0
        k_hat = sfft.rfftn(kern)
        num = sfft.irfftn(self._num_hat * k_hat, s=self._fshape)
        den = sfft.irfftn(self._den_hat * k_hat, s=self._fshape)
        sl = tuple(slice(0, s) for s in d.shape)
        return num[sl] / den[sl]


def maximal_function(g: Field, radii) -> Field:
    """``max`` over ``radii`` of the weighted average of ``|g|`` on open discrete balls.

    A radius not exceeding the grid spacing gives the one-node ball, so
    including ``h`` in ``radii`` makes the result dominate ``|g|`` exactly.
    """
    radii = list(radii)
    if not radii:
        raise ValueError("radii list is empty")
    h = float(g.domain.spacing.min())
    if min(radii) < h * (1 - _REL):
        raise ValueError("every radius must be at least the grid spacing")
    avg = _BallAverager(g.domain, g.magnitude())
    out = None
    for r in sorted(set(float(r) for r in radii), reverse=True):
        a = avg.average(r)
        out = a if out is None else np.maximum(out, a)
    return Field(g.domain, out)


@dataclass(frozen=True)
class GoodSetMask:
    """Nodes where the maximal function does not exceed ``t``."""

    domain: BoxDomain
    t: float
    mask: np.ndarray
    maximal: Field | None = None

    @property
    def complement_measure(self) -> float:
        return self.domain.cell_volume * int(np.count_nonzero(~self.mask))

    @classmethod
    def from_maximal(cls, maximal: Field, t: float) -> "GoodSetMask":
        if t <= 0:
            raise ValueError("threshold must be positive")
        m = maximal.values[..., 0] <= t
        m.setflags(write=False)
        return cls(maximal.domain, float(t), m, maximal)


def good_set(g: Field, t: float, radii) -> GoodSetMask:
    """``{x : M g(x) <= t}``; ``complement_measure`` is ``h^n`` times the node count."""
    if t <= 0:
        raise ValueError("threshold must be positive")
    return GoodSetMask.from_maximal(maximal_function(g, radii), t)


@dataclass
class WhitneyCover:
    """Balls ``B(x_i, r_i)`` with ``r_i = dist(x_i, E_t) / 10`` covering the
    complement of a good set.

    ``complement`` holds flat node indices of the complement, ``dist`` their
    distance to the good set, ``centers`` flat node indices of the chosen
    ball centers.
    """

    good: GoodSetMask
    centers: np.ndarray
    radii: np.ndarray
    complement: np.ndarray
    dist: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def domain(self) -> BoxDomain:
        return self.good.domain

    def __len__(self):
        return len(self.centers)

    def center_points(self) -> np.ndarray:
        return self.domain.points()[self.centers]

    def complement_tree(self):
        pts, box = self.domain.kdtree_frame()
        return cKDTree(pts[self.complement], boxsize=box), pts

    def check(self) -> dict:
        """Verify properties (a)-(d) at every node; returns a report dict."""
        d = self.domain
        pts, box = d.kdtree_frame()
        comp_pts = pts[self.complement]
        report = {"balls": int(len(self)), "complement_nodes": int(len(self.complement))}
        if len(self) == 0:
            report.update(a=len(self.complement) == 0, b=True, c=True, overlap=0,
                          overlap_bound=overlap_bound(d.n), d=True)
            return report
        tree = cKDTree(comp_pts, boxsize=box)
        c_pts = pts[self.centers]

        # (a) every complement node lies in some open ball B(x_i, r_i)
        covered = np.zeros(len(self.complement), bool)
        for c, r in zip(c_pts, self.radii):
            covered[tree.query_ball_point(c, r * (1 - _REL))] = True
        # a ball of radius below h still contains its own center
        covered[np.searchsorted(self.complement, self.centers)] = True
        report["a"] = bool(covered.all())

        # (b) no good node within 5 r_i of the center
        good_idx = np.flatnonzero(self.good.mask.ravel())
        gtree = cKDTree(pts[good_idx], boxsize=box)
        dg, _ = gtree.query(c_pts)
        report["b"] = bool(np.all(dg >= 5 * self.radii * (1 - _REL)))

        # (c) and (d) on the nodes of every 5-ball
        counts = np.zeros(len(self.complement), np.int64)
        ok_c = True
        for c, r in zip(c_pts, self.radii):
            idx = tree.query_ball_point(c, 5 * r * (1 - _REL))
            if not idx:
                continue
            idx = np.asarray(idx)
            counts[idx] += 1
            dd = self.dist[idx]
            if np.any(dd < 5 * r * (1 - 1e-9)) or np.any(dd > 15 * r * (1 + 1e-9)):
                ok_c = False
        report["c"] = ok_c
        report["overlap"] = int(counts.max())
        report["overlap_bound"] = overlap_bound(d.n)
        report["d"] = report["overlap"] <= report["overlap_bound"]
        return report

    def to_csv(self) -> str:
        from .io import table_to_csv
        d = self.domain
        cols = [f"x{k}" for k in range(d.n)] + ["radius"]
        rows = []
        for p, r in zip(self.center_points(), self.radii):
            row = {f"x{k}": float(p[k]) for k in range(d.n)}
            row["radius"] = float(r)
            rows.append(row)
        return table_to_csv(cols, rows)


def overlap_bound(n: int) -> int:
    """A priori bound on the overlap of the 5-balls of a greedy cover.

    If ``x`` lies in ``B(x_i, 5 r_i)`` then ``d/15 <= r_i <= d/5`` with
    ``d = dist(x, E_t)``.  Greedy centers are separated by the radius of the
    earlier ball, hence by ``d/15``, and all lie in ``B(x, d)``; a volume
    count of disjoint ``d/30`` balls gives ``31^n``.
    """
    return 31 ** n


def distance_to_good_set(good: GoodSetMask, nodes: np.ndarray) -> np.ndarray:
    d = good.domain
    pts, box = d.kdtree_frame()
    good_idx = np.flatnonzero(good.mask.ravel())
    if len(good_idx) == 0:
        raise ValueError("unbounded Whitney radii: the good set is empty")
    tree = cKDTree(pts[good_idx], boxsize=box)
    dist, _ = tree.query(pts[nodes])
    return dist


def whitney_cover(good: GoodSetMask, verify: bool = True) -> WhitneyCover:
    """Greedy ball cover of the complement of ``good``.

    Complement nodes are visited by decreasing distance to the good set
    (ties by flat node index); a node becomes a center unless an earlier
    ball already contains it.
    """
    complement = np.flatnonzero(~good.mask.ravel())
    if len(complement) == 0:
        empty = WhitneyCover(good, np.zeros(0, np.int64), np.zeros(0), complement, np.zeros(0))
        empty.stats = empty.check()
        return empty
    dist = distance_to_good_set(good, complement)
    d = good.domain
    pts, box = d.kdtree_frame()
    tree = cKDTree(pts[complement], boxsize=box)
    order = np.lexsort((complement, -dist))
    covered = np.zeros(len(complement), bool)
    centers, radii = [], []
    for j in order:
        if covered[j]:
            continue
        r = dist[j] / 10.0
        centers.append(complement[j])
        radii.append(r)
        covered[j] = True
        idx = tree.query_ball_point(pts[complement[j]], r * (1 - _REL))
        if idx:
            covered[idx] = True
    cover = WhitneyCover(good, np.asarray(centers, np.int64), np.asarray(radii), complement, dist)
    if verify:
        rep = cover.check()
        cover.stats = rep
        bad = [k for k in ("a", "b", "c", "d") if not rep[k]]
        if bad:
            raise WhitneyCoverError(f"cover violates properties {bad}: {rep}")
    return cover


@dataclass
class PartitionOfUnity:
    """Normalised tents ``phi_i = zeta_i / sum_j zeta_j`` with
    ``zeta_i(x) = clip(2 - |x - x_i| / r_i, 0, 1)``.

    ``matrix`` is a sparse ``(domain.size, len(cover))`` array holding
    ``phi_i`` at every node (rows of good-set nodes are empty).
    """

    cover: WhitneyCover
    matrix: sp.csr_matrix

    def weights_at(self, nodes) -> sp.csr_matrix:
        return self.matrix[np.asarray(nodes)]

    def sum_error(self) -> float:
        s = np.asarray(self.matrix[self.cover.complement].sum(axis=1)).ravel()
        return float(np.abs(s - 1.0).max()) if len(s) else 0.0

    def lipschitz_constants(self) -> np.ndarray:
        """Discrete Lipschitz constant of each ``phi_i`` over axis-neighbour pairs."""
        d = self.cover.domain
        idx = np.arange(d.size).reshape(d.shape)
        best = np.zeros(self.matrix.shape[1])
        for k in range(d.n):
            if d.periodic[k]:
                a, b = idx, np.roll(idx, -1, axis=k)
            else:
                sl_a = [slice(None)] * d.n
                sl_b = [slice(None)] * d.n
                sl_a[k] = slice(0, -1)
                sl_b[k] = slice(1, None)
                a, b = idx[tuple(sl_a)], idx[tuple(sl_b)]
            diff = abs(self.matrix[a.ravel()] - self.matrix[b.ravel()])
            if diff.nnz:
                colmax = diff.max(axis=0).toarray().ravel()
                best = np.maximum(best, colmax / d.spacing[k])
        return best

    def lipschitz_times_radius(self) -> float:
        if self.matrix.shape[1] == 0:
            return 0.0
        return float(np.max(self.lipschitz_constants() * self.cover.radii))


def partition_of_unity(cover: WhitneyCover) -> PartitionOfUnity:
    d = cover.domain
    if len(cover) == 0:
        raise ValueError("partition of unity needs a nonempty cover")
    pts, box = d.kdtree_frame()
    comp = cover.complement
    tree = cKDTree(pts[comp], boxsize=box)
    rows, cols, vals = [], [], []
    for i, (c, r) in enumerate(zip(pts[cover.centers], cover.radii)):
        idx = np.asarray(tree.query_ball_point(c, 2 * r), dtype=np.int64)
        if idx.size == 0:
            continue
        dist = d.distance(pts[comp[idx]], c)
        z = np.clip(2.0 - dist / r, 0.0, 1.0)
        nz = z > 0
        rows.append(comp[idx[nz]])
        cols.append(np.full(int(nz.sum()), i))
        vals.append(z[nz])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    zeta = sp.csr_matrix((vals, (rows, cols)), shape=(d.size, len(cover)))
    total = np.asarray(zeta.sum(axis=1)).ravel()
    if np.any(total[comp] <= 0):
        raise WhitneyCoverError("some complement node is outside every ball")
    inv = np.zeros(d.size)
    inv[comp] = 1.0 / total[comp]
    phi = sp.diags(inv) @ zeta
    return PartitionOfUnity(cover, phi.tocsr())


def ball_nodes(domain: BoxDomain, center, radius: float) -> np.ndarray:
    """Flat indices of nodes in the open ball (periodic distance)."""
    pts = domain.points()
    dist = domain.distance(pts, np.asarray(center, float))
    return np.flatnonzero(dist < radius * (1 - _REL))


def pointwise_inequality_check(u: Field, radii, pairs: int, rng=None) -> dict:
    """Empirical constant in ``|u(x)-u(y)| <= C d(x,y) (Mg(x) + Mg(y))``
    with ``g = |grad u|``, over random node pairs."""
    if pairs < 1:
        raise ValueError("need at least one sample pair")
    rng = np.random.default_rng(rng)
    d = u.domain
    mg = maximal_function(gradient_magnitude(u), radii).values.ravel()
    pts = d.points()
    vals = u.flat()
    i = rng.integers(0, d.size, pairs)
    j = rng.integers(0, d.size, pairs)
    keep = i != j
    i, j = i[keep], j[keep]
    dist = d.distance(pts[i], pts[j])
    num = np.sqrt(np.sum((vals[i] - vals[j]) ** 2, axis=1))
    den = dist * (mg[i] + mg[j])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(num == 0, 0.0, num / den)
    return {"C": float(ratio.max()) if len(ratio) else 0.0, "pairs": int(len(ratio))}


def poincare_check(u: Field, center, radius: float) -> tuple:
    """Return ``(mean |u - u_B|, r * mean |grad u|)`` over the discrete ball."""
    d = u.domain
    if radius < 2 * d.spacing.min() * (1 - _REL):
        raise ValueError("ball radius must be at least 2h")
    nodes = ball_nodes(d, center, radius)
    if len(nodes) < 2:
        raise ValueError("ball contains fewer than two nodes")
    w = d.weights().ravel()[nodes]
    vals = u.flat()[nodes]
    ub = (w[:, None] * vals).sum(axis=0) / w.sum()
    lhs = float(np.sum(w * np.sqrt(np.sum((vals - ub) ** 2, axis=1))) / w.sum())
    g = gradient_magnitude(u).values.ravel()[nodes]
    rhs = float(radius * np.sum(w * g) / w.sum())
    return lhs, rhs
