"""Wrinkled boxes: the distance function to a dense family of parallel
slabs, the shears that bend a flat face onto its graph, and the sawtooth
whose length stays at sqrt(2) however fine the teeth.

Points of the box ``K_m`` are written ``(x', y, z)`` with ``x'`` in
``[1, 2]^n``, ``y`` the shear direction (``|y| <= H = 2^-(m+2)``) and ``z``
within ``H`` of ``2^-m``.  The face ``E_m = {y = 0}`` carries the slabs
``x'_n = 1 + i 2^-(m+10)``; the working plane of the 2D realisations is
``(x'_n, z)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ..grid import BoxDomain, Field, Polyline, SegmentSet, distance_to_segments, \
    polyline_length


@dataclass(frozen=True)
class WrinkleSpec:
    """Level ``m >= 0`` and the dimension ``n`` of the flat face ``[1, 2]^n``."""

    m: int
    n: int = 1

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("level must be nonnegative")
        if self.n < 1:
            raise ValueError("n must be positive")

    @property
    def spacing(self) -> float:
        """Slab spacing ``2^-(m+10)``."""
        return 2.0 ** (-(self.m + 10))

    @property
    def slab_count(self) -> int:
        return 2 ** (self.m + 10) + 1

    @property
    def half_height(self) -> float:
        """``H = 2^-(m+2)``, half the extent of ``K_m`` in ``y`` and ``z``."""
        return 2.0 ** (-(self.m + 2))

    @property
    def z_center(self) -> float:
        return 2.0 ** (-self.m)

    def slabs(self, lo: float = 1.0, hi: float = 2.0) -> np.ndarray:
        """Slab abscissae in ``[lo, hi]`` (all of them by default)."""
        i0 = max(0, math.ceil((lo - 1.0) / self.spacing))
        i1 = min(self.slab_count - 1, math.floor((hi - 1.0) / self.spacing))
        return 1.0 + np.arange(i0, i1 + 1) * self.spacing

    def extents(self) -> dict:
        H = self.half_height
        return {"x": [1.0, 2.0], "y": [-H, H], "z": [self.z_center - H, self.z_center + H]}

    def skeleton(self, window=None) -> SegmentSet:
        """``F_m`` in the working plane ``(x'_n, z)``: slab lines and the
        boundary of the face.  ``window = ((x0, x1), (z0, z1))`` keeps only the
        slabs that can be nearest to a point of the window."""
        z0, z1 = self.z_center - self.half_height, self.z_center + self.half_height
        if window is None:
            xs = self.slabs()
        else:
            (a, b), _ = window
            xs = self.slabs(a - self.spacing, b + self.spacing)
        pairs = [((x, z0), (x, z1)) for x in xs]
        pairs += [((1.0, z0), (2.0, z0)), ((1.0, z1), (2.0, z1))]
        return SegmentSet.from_pairs(pairs)

    def phi(self, xp, z) -> np.ndarray:
        """``phi_m(x', 0, z) = dist((x', z), F_m)`` evaluated in closed form.

        Inside the face the nearest point of ``F_m`` is either on a slab
        (distance along ``x'_n``), on a face ``x'_j in {1, 2}`` or on a
        ``z`` face, and each of these is a coordinate distance.
        """
        xp = np.asarray(xp, float)
        if xp.shape[-1:] != (self.n,):
            raise ValueError(f"x' must have a trailing axis of length {self.n}")
        z = np.asarray(z, float)
        last = xp[..., -1]
        u = (last - 1.0) / self.spacing
        d_slab = np.abs(u - np.round(u)) * self.spacing
        d = d_slab
        if self.n > 1:
            other = xp[..., :-1]
            d = np.minimum(d, np.min(np.minimum(other - 1.0, 2.0 - other), axis=-1))
        dz = self.half_height - np.abs(z - self.z_center)
        return np.maximum(np.minimum(d, dz), 0.0)

    def phi_plane(self, x, z) -> np.ndarray:
        """``phi_m`` on the working plane ``(x'_n, z)`` (the other ``x'``
        coordinates at the middle of the face)."""
        x = np.asarray(x, float)
        xp = np.full(x.shape + (self.n,), 1.5)
        xp[..., -1] = x
        return self.phi(xp, z)

    def to_json(self) -> str:
        d = {"kind": "WrinkleSpec", "m": self.m, "n": self.n, "spacing": self.spacing,
             "slab_count": self.slab_count, "extents": self.extents()}
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "WrinkleSpec":
        d = json.loads(text)
        return cls(m=int(d["m"]), n=int(d["n"]))


def wrinkle_domain(spec: WrinkleSpec, teeth: int = 4, samples_per_tooth: int = 16,
                   z_nodes: int = 65) -> BoxDomain:
    """Working-plane window ``[1, 1 + teeth * spacing] x [z-range]``."""
    H = spec.half_height
    return BoxDomain((1.0, spec.z_center - H), (1.0 + teeth * spec.spacing, spec.z_center + H),
                     (teeth * samples_per_tooth + 1, z_nodes))


def wrinkle_field(spec: WrinkleSpec, domain: BoxDomain) -> Field:
    """``phi_m`` on a working-plane grid via the exact segment distance."""
    if domain.n != 2:
        raise ValueError("the working plane is two dimensional")
    window = tuple(zip(domain.lower, domain.upper))
    return distance_to_segments(domain, spec.skeleton(window))


def sawtooth_length(m: int, samples_per_tooth: int) -> float:
    """Length of the polyline through ``(t, dist(t, S))`` sampled uniformly on
    ``[1, 2]`` with ``samples_per_tooth`` nodes per slab gap."""
    if samples_per_tooth < 4:
        raise ValueError("need at least 4 samples per tooth")
    spec = WrinkleSpec(m)
    cells = (spec.slab_count - 1) * samples_per_tooth
    t = 1.0 + np.arange(cells + 1) * (spec.spacing / samples_per_tooth)
    u = (t - 1.0) / spec.spacing
    d = np.abs(u - np.round(u)) * spec.spacing
    return polyline_length(Polyline(np.column_stack([t, d])))


def flat_length() -> float:
    """Length of ``t -> (t, 0)`` on ``[1, 2]``."""
    return polyline_length(Polyline(np.array([[1.0, 0.0], [2.0, 0.0]])))


def _split(spec: WrinkleSpec, pts):
    pts = np.atleast_2d(np.asarray(pts, float))
    if pts.shape[-1] != spec.n + 2:
        raise ValueError(f"points must have {spec.n + 2} coordinates")
    return pts, pts[:, :spec.n], pts[:, spec.n], pts[:, spec.n + 1]


def shear_map(spec: WrinkleSpec, pts, inverse: bool = False, fix_boundary: bool = False):
    """Apply the shear ``y -> y + phi_m(x', z)`` (or its inverse).

    With ``fix_boundary`` the map is the boundary-fixing variant, piecewise
    linear in ``y`` on ``[-H, 0]`` and ``[0, H]`` and sending ``0`` to
    ``phi_m``; it is the identity on all of ``dK_m``.
    """
    pts, xp, y, z = _split(spec, pts)
    phi = spec.phi(xp, z)
    out = pts.copy()
    if not fix_boundary:
        out[:, spec.n] = y - phi if inverse else y + phi
        return out
    H = spec.half_height
    if np.any(np.abs(y) > H * (1 + 1e-12)):
        raise ValueError("points outside the y-extent of the box")
    if not inverse:
        up = y >= 0
        out[:, spec.n] = np.where(up, phi + y * (H - phi) / H, phi + y * (H + phi) / H)
    else:
        up = y >= phi
        out[:, spec.n] = np.where(up, (y - phi) * H / (H - phi), (y - phi) * H / (H + phi))
    return out


def sample_box(spec: WrinkleSpec, count: int, rng, teeth_window: int | None = None) -> np.ndarray:
    """Uniform points of ``K_m``; ``teeth_window`` restricts ``x'_n`` to a few teeth."""
    H = spec.half_height
    pts = np.empty((count, spec.n + 2))
    pts[:, :spec.n] = 1.0 + rng.random((count, spec.n))
    if teeth_window is not None:
        pts[:, spec.n - 1] = 1.0 + rng.random(count) * teeth_window * spec.spacing
    pts[:, spec.n] = rng.uniform(-H, H, count)
    pts[:, spec.n + 1] = spec.z_center + rng.uniform(-H, H, count)
    return pts


def bilipschitz_estimate(spec: WrinkleSpec, pairs: int, rng=None,
                         fix_boundary: bool = True) -> tuple:
    """``(min, max)`` of ``|Phi(x) - Phi(y)| / |x - y|`` over random pairs.

    Pairs are drawn at separations from the whole box down to a hundredth of
    a tooth, so both the global and the tooth-scale behaviour are probed.
    """
    if pairs < 1:
        raise ValueError("need at least one pair")
    rng = np.random.default_rng(rng)
    H = spec.half_height
    x = sample_box(spec, pairs, rng, teeth_window=8)
    scales = spec.spacing * 10.0 ** rng.uniform(-2, math.log10(H / spec.spacing) + 1, pairs)
    direction = rng.normal(size=x.shape)
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    y = x + scales[:, None] * direction
    lo = np.array([1.0] * spec.n + [-H, spec.z_center - H])
    hi = np.array([2.0] * spec.n + [H, spec.z_center + H])
    y = np.clip(y, lo, hi)
    keep = np.linalg.norm(y - x, axis=1) > 0
    x, y = x[keep], y[keep]
    fx = shear_map(spec, x, fix_boundary=fix_boundary)
    fy = shear_map(spec, y, fix_boundary=fix_boundary)
    ratio = np.linalg.norm(fx - fy, axis=1) / np.linalg.norm(x - y, axis=1)
    return float(ratio.min()), float(ratio.max())


def wrinkle_surface(spec: WrinkleSpec, teeth: int = 4, samples_per_tooth: int = 8,
                    z_nodes: int = 17):
    """Axes and heights of the graph ``G_m`` over a window of the face."""
    d = wrinkle_domain(spec, teeth, samples_per_tooth, z_nodes)
    x, z = d.axis(0), d.axis(1)
    X, Z = np.meshgrid(x, z, indexing="ij")
    return x, z, spec.phi_plane(X, Z)
