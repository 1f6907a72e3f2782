"""Log-log capacity bumps, the singular function gamma built from them, its
partial sums, the packing counts that rule out Lipschitz surjections onto
its graph, and the graph projections pi_m.

The bump profile is the truncation of ``eta(x) = log|log|x||`` between
levels ``s`` and ``s + tau``.  Writing ``rho = log|x|``, the truncated
profile is ``clip(log(-rho) - s, 0, tau)`` and its ``n``-energy is
``|S^{n-1}| * int |d/drho|^n drho``, which does not involve the physical
radius at all.  That is the scale invariance used to evaluate energies at
the true (astronomically small) radii.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, special
from scipy.spatial import cKDTree

from ..grid import BoxDomain, Field, lp_norm, w1p_norm, gradient

LN2 = math.log(2.0)
# largest x with exp(-x) a normal double
_EXP_FLOOR = -math.log(np.finfo(float).tiny)


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / special.gamma(n / 2)


def band_radii(s: float, tau: float) -> tuple:
    """Radii ``(r_in, r_out)`` with ``log|log r|`` equal to ``s + tau`` and ``s``."""
    return math.exp(-math.exp(s + tau)), math.exp(-math.exp(s))


def loglog_truncation_energy(n: int, s: float, tau: float) -> float:
    """``int |grad eta_s^{s+tau}|^n`` by radial quadrature in ``r``.

    The integrand ``|S^{n-1}| r^{n-1} (r |log r|)^{-n}``, simplified to
    ``|S^{n-1}| / (r |log r|^n)`` so tiny radii do not overflow, is
    integrated over the band ``r_in <= r <= r_out`` split into geometric
    pieces.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if s <= 1:
        raise ValueError("s must exceed 1")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau == 0:
        return 0.0
    if math.exp(s + tau) > _EXP_FLOOR:
        s_max = math.log(_EXP_FLOOR) - tau
        raise ValueError(f"inner band radius underflows; need s + tau <= {math.log(_EXP_FLOOR):.4f}"
                         f" (s <= {s_max:.4f} for tau={tau})")
    r_in, r_out = band_radii(s, tau)
    area = sphere_area(n)

    def integrand(r):
        return area / (r * abs(math.log(r)) ** n)

    edges = np.geomspace(r_in, r_out, 65)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
    return total


def _kernel_weights(m: int = 401):
    """Nodes in [-1, 1] and normalised weights of the C^1 biweight kernel."""
    z = np.linspace(-1.0, 1.0, m)
    k = (1.0 - z * z) ** 2
    return z, k / k.sum()


def log_profile_slope(rho, s: float, tau: float) -> np.ndarray:
    """``d/drho`` of the truncated profile ``clip(log(-rho) - s, 0, tau)``."""
    rho = np.asarray(rho, float)
    lo, hi = -math.exp(s + tau), -math.exp(s)
    inside = (rho > lo) & (rho < hi)
    safe = np.where(inside, rho, -1.0)
    return np.where(inside, 1.0 / safe, 0.0)


def profile_log_energy(n: int, s: float, tau: float, mollify: bool = False) -> float:
    """``n``-energy of the (optionally mollified) truncated profile, by
    quadrature in the log-radius variable.

    After scaling ``rho = -e^s v`` the energy is
    ``|S^{n-1}| e^{-s(n-1)} int_1^{e^tau} v^{-n} dv`` for the plain profile;
    the mollified profile has slope equal to the kernel average of the
    plain slope over a window of half-width 5% of the band.  The factor
    ``e^{-s(n-1)}`` is applied in log form by :func:`profile_log_energy_log`.
    """
    return math.exp(profile_log_energy_log(n, s, tau, mollify))


def profile_log_energy_log(n: int, s: float, tau: float, mollify: bool = False) -> float:
    """Natural log of :func:`profile_log_energy`; safe for huge ``s``."""
    if tau <= 0:
        return -math.inf
    area = sphere_area(n)
    top = math.exp(tau)
    if not mollify:
        val, _ = integrate.quad(lambda v: v ** (-n), 1.0, top, epsabs=0.0, epsrel=1e-13)
    else:
        # scaled variable v in [1, e^tau]; window half-width in v units
        w = 0.05 * (top - 1.0)
        z, kw = _kernel_weights()
        breaks = np.unique(np.concatenate([np.linspace(1.0 - w, 1.0 + w, 9),
                                           np.linspace(1.0 + w, top - w, 33),
                                           np.linspace(top - w, top + w, 9)]))
        gx, gw = np.polynomial.legendre.leggauss(24)
        lo, hi = breaks[:-1, None], breaks[1:, None]
        v = (0.5 * (hi - lo) * gx + 0.5 * (hi + lo)).ravel()
        wt = (0.5 * (hi - lo) * gw).ravel()
        vv = v[:, None] - w * z[None, :]
        inside = (vv > 1.0) & (vv < top)
        slope = np.sum(kw * np.where(inside, 1.0 / np.where(inside, vv, 1.0), 0.0), axis=1)
        val = float(np.sum(wt * slope ** n))
    return math.log(area * val) - s * (n - 1)


def profile_energy_physical(n: int, s: float, tau: float, support_radius: float) -> float:
    """Radial quadrature in ``r`` of the profile dilated so that its support
    has radius ``support_radius``; used to check dilation invariance."""
    r_in, r_out = band_radii(s, tau)
    lam = support_radius / r_out
    lo, hi = lam * r_in, support_radius
    if lo <= 0 or not math.isfinite(lo):
        raise ValueError("dilated band is outside floating point range")
    area = sphere_area(n)

    def integrand(r):
        x = r / lam
        return area * r ** (n - 1) * (r * abs(math.log(x))) ** (-n)

    edges = np.geomspace(lo, hi, 65)
    total = 0.0
    for a_, b_ in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, a_, b_, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
    return total


# --------------------------------------------------------------------------
# bump families

RADIUS_LAWS = {
    "squared": lambda k: 2.0 ** (-k * k),
    "gentle": lambda k: 2.0 ** (-2 * k),
}


@dataclass(frozen=True)
class BumpFamily:
    """Placement and levels of the bumps ``eta_{k,i}``.

    Layer ``k`` sits in ``B_k = B((0, .., 0, 2^-k), 2^-(k+2))``; its bumps are
    translates of one profile supported in half of a ball of radius
    ``bump_radius(k)`` and reaching height ``2^-k``.

    ``radius_law`` is ``"squared"`` (``2^{-k^2}``), ``"gentle"`` (``2^{-2k}``)
    or ``"shift:<b>"`` (``2^{-(k+b)}``).  ``level_rule`` picks the lower
    truncation level ``s_k``: ``"budget"`` makes the bump energy at most
    half of ``radius^n`` with the support inside half the ball, ``"plateau"``
    makes the top plateau a quarter of the support radius (visible on a
    grid).  ``max_bumps`` caps the number of bumps per layer; ``None`` uses
    the full count ``c(n) 2^{(k^2-k)n}``.  ``radius_scale`` dilates every
    bump while keeping its levels.
    """

    n: int = 2
    k0: int = 6
    kmax: int = 12
    radius_law: str = "squared"
    level_rule: str = "budget"
    c_n: float = 1.0
    max_bumps: int | None = None
    mollify: bool = False
    height_scale: float = 1.0
    radius_scale: float = 1.0
    levels: tuple | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("bump families need n >= 2")
        if self.kmax < self.k0:
            raise ValueError("empty k range")
        if self.level_rule not in ("budget", "plateau"):
            raise ValueError(f"unknown level rule {self.level_rule!r}")
        self._law(self.k0)

    @property
    def ks(self) -> range:
        return range(self.k0, self.kmax + 1)

    def _law(self, k: int) -> float:
        law = self.radius_law
        if law in RADIUS_LAWS:
            return RADIUS_LAWS[law](k)
        if law.startswith("shift:"):
            return 2.0 ** (-(k + float(law.split(":", 1)[1])))
        raise ValueError(f"unknown radius law {law!r}")

    def layer_center(self, k: int) -> np.ndarray:
        c = np.zeros(self.n)
        c[-1] = 2.0 ** (-k)
        return c

    def layer_radius(self, k: int) -> float:
        return 2.0 ** (-(k + 2))

    def bump_radius(self, k: int) -> float:
        return self._law(k) * self.radius_scale

    def budget(self, k: int) -> float:
        """Per-bump energy budget ``eps_k^n`` with ``eps_k`` the undilated radius."""
        return self._law(k) ** self.n

    def height(self, k: int) -> float:
        return 2.0 ** (-k) * self.height_scale

    def full_count(self, k: int) -> float:
        """``c(n) 2^{(k^2 - k) n}`` (as a float; exact when ``c(n)`` is a power of 2)."""
        return self.c_n * 2.0 ** ((k * k - k) * self.n)

    def count(self, k: int) -> float:
        full = self.full_count(k)
        if self.max_bumps is None:
            return full
        return float(min(full, self.max_bumps, len(self.bump_centers(k))))

    def level(self, k: int) -> float:
        """Lower truncation level ``s_k``."""
        if self.levels is not None:
            return float(dict(self.levels)[k])
        tau = 2.0 ** (-k)
        if self.level_rule == "plateau":
            # plateau radius / support radius = exp(-e^s (e^tau - 1)) = 1/4
            return math.log(math.log(4.0) / math.expm1(tau))
        eps = self._law(k)
        # support: exp(-e^s) <= eps/2, widened by the mollifier window
        grow = 1.0 - (0.05 * math.expm1(tau) if self.mollify else 0.0)
        s_support = math.log(math.log(2.0 / eps) / grow)
        # energy: area * e^{-s(n-1)} * I(tau) <= eps^n / 2
        log_unit = profile_log_energy_log(self.n, 0.0, tau, self.mollify)
        s_energy = (log_unit - (self.n * math.log(eps) - LN2)) / (self.n - 1)
        return max(s_support, s_energy, 1.0 + 1e-9)

    def profile_log_scale(self, k: int) -> float:
        """``log lambda`` such that the bump support radius is half the bump radius."""
        s, tau = self.level(k), 2.0 ** (-k)
        outer = -math.exp(s)
        if self.mollify:
            outer += 0.05 * math.exp(s) * math.expm1(tau)
        return math.log(0.5 * self.bump_radius(k)) - outer

    def bump_centers(self, k: int) -> np.ndarray:
        """Square-lattice centers with spacing ``2 * radius`` inside ``B_k``.

        Balls ``B(x_{k,i}, radius)`` stay inside ``B_k`` and are pairwise
        disjoint; the list is truncated to ``max_bumps`` nearest to the
        layer center.
        """
        rho = self.bump_radius(k)
        R = self.layer_radius(k)
        if R - rho < 0:
            return np.zeros((0, self.n))
        m = int(math.floor((R - rho) / (2 * rho)))
        if (2 * m + 1) ** self.n > 4_000_000:
            raise ValueError(f"layer {k} has too many bumps to enumerate; set max_bumps")
        ax = np.arange(-m, m + 1) * 2 * rho
        grid = np.stack([g.ravel() for g in np.meshgrid(*([ax] * self.n), indexing="ij")], -1)
        rad = np.sqrt(np.sum(grid ** 2, axis=1))
        grid = grid[rad <= R - rho]
        order = np.lexsort(tuple(grid.T[::-1]) + (np.round(np.sum(grid ** 2, axis=1) / rho ** 2, 6),))
        grid = grid[order]
        if self.max_bumps is not None:
            grid = grid[: self.max_bumps]
        return grid + self.layer_center(k)

    def dilated(self, factor: float) -> "BumpFamily":
        levels = tuple((k, self.level(k)) for k in self.ks)
        return replace(self, radius_scale=self.radius_scale * factor, levels=levels)

    def truncated(self, kmax: int) -> "BumpFamily":
        levels = None if self.levels is None else tuple(p for p in self.levels if p[0] <= kmax)
        return replace(self, kmax=kmax, levels=levels)

    def to_json(self) -> str:
        d = {"kind": "BumpFamily", "n": self.n, "k0": self.k0, "kmax": self.kmax,
             "radius_law": self.radius_law, "level_rule": self.level_rule, "c_n": self.c_n,
             "max_bumps": self.max_bumps, "mollify": self.mollify,
             "height_scale": self.height_scale, "radius_scale": self.radius_scale,
             "layers": [{"k": k, "center": self.layer_center(k).tolist(),
                         "layer_radius": self.layer_radius(k),
                         "bump_radius": self.bump_radius(k), "height": self.height(k),
                         "level": self.level(k)} for k in self.ks]}
        if self.levels is not None:
            d["levels"] = [[k, s] for k, s in self.levels]
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BumpFamily":
        d = json.loads(text)
        levels = d.get("levels")
        return cls(n=d["n"], k0=d["k0"], kmax=d["kmax"], radius_law=d["radius_law"],
                   level_rule=d["level_rule"], c_n=d["c_n"], max_bumps=d["max_bumps"],
                   mollify=d["mollify"], height_scale=d["height_scale"],
                   radius_scale=d["radius_scale"],
                   levels=None if levels is None else tuple((int(k), float(s)) for k, s in levels))


def gamma_energy(family: BumpFamily) -> dict:
    """Total ``n``-energy of ``gamma`` restricted to the family's layers.

    One profile energy per layer (dilation invariant, computed in the log
    variable) times the bump count.  The ledger keeps natural logs next to
    the plain values so layers far below the float range are still reported.
    """
    n = family.n
    rows = []
    total = 0.0
    bound = 0.0
    for k in family.ks:
        s, tau = family.level(k), 2.0 ** (-k)
        log_e = profile_log_energy_log(n, s, tau, mollify=False)
        log_em = profile_log_energy_log(n, s, tau, mollify=True)
        log_count = math.log(family.count(k))
        log_budget = n * math.log(family._law(k))
        layer = math.exp(log_count + (log_em if family.mollify else log_e))
        total += layer
        bound += family.c_n * 2.0 ** (-k * n)
        rows.append({
            "k": k, "level": s, "count_log2": log_count / LN2,
            "bump_energy_log2": log_e / LN2, "bump_energy_mollified_log2": log_em / LN2,
            "budget_log2": log_budget / LN2,
            "layer_energy": layer,
            "layer_budget": math.exp(log_count + log_budget),
            "within_budget": (log_em if family.mollify else log_e) <= log_budget,
        })
    return {"total": total, "bound": bound, "ledger": rows}


# --------------------------------------------------------------------------
# gridded gamma

def _profile_table(s: float, tau: float, mollify: bool, m: int = 4001):
    """Profile value as a function of ``rho - log lambda`` on a dense table."""
    lo, hi = -math.exp(s + tau), -math.exp(s)
    w = 0.05 * (hi - lo) if mollify else 0.0
    x = np.linspace(lo - 2 * w - 1e-9, hi + 2 * w + 1e-9, m)

    def plain(r):
        r = np.asarray(r, float)
        with np.errstate(invalid="ignore", divide="ignore"):
            v = np.log(np.where(r < 0, -r, 1.0)) - s
        return np.clip(np.where(r < 0, v, 0.0), 0.0, tau)

    if not mollify:
        return x, plain(x), lo, hi
    z, kw = _kernel_weights()
    vals = np.array([np.sum(kw * plain(xx - w * z)) for xx in x])
    return x, vals, lo - w, hi + w


def gamma_values(family: BumpFamily, points, kmax: int | None = None) -> np.ndarray:
    """Evaluate ``gamma_m`` (layers ``k0..kmax``) at arbitrary points."""
    pts = np.atleast_2d(np.asarray(points, float))
    out = np.zeros(len(pts))
    kmax = family.kmax if kmax is None else kmax
    for k in range(family.k0, kmax + 1):
        centers = family.bump_centers(k)
        if len(centers) == 0:
            continue
        s, tau = family.level(k), 2.0 ** (-k)
        x, table, lo, hi = _profile_table(s, tau, family.mollify)
        log_lam = family.profile_log_scale(k)
        support = 0.5 * family.bump_radius(k)
        tree = cKDTree(centers)
        near = tree.query_ball_point(pts, support)
        for j, idx in enumerate(near):
            if not idx:
                continue
            dist = np.sqrt(np.sum((centers[idx] - pts[j]) ** 2, axis=1)).min()
            if dist == 0.0:
                out[j] += tau * family.height_scale
                continue
            rho = math.log(dist) - log_lam
            if rho <= lo:
                val = tau
            elif rho >= hi:
                val = 0.0
            else:
                val = float(np.interp(rho, x, table))
            out[j] += val * family.height_scale
    return out


def gamma_field(family: BumpFamily, domain: BoxDomain, kmax: int | None = None) -> Field:
    """Grid realisation of ``gamma_m``; every bump support must span 2h."""
    h = float(domain.spacing.max())
    bad = [k for k in family.ks if len(family.bump_centers(k)) and family.bump_radius(k) < 4 * h]
    if bad:
        raise ValueError(f"bump radius below 4h for layers {bad}; coarser radius law or finer grid")
    if domain.n != family.n:
        raise ValueError("domain dimension differs from the family's")
    vals = gamma_values(family, domain.points(), kmax)
    return Field(domain, vals.reshape(domain.shape))


def bump_support_overlap(family: BumpFamily, domain: BoxDomain) -> np.ndarray:
    """Number of closed bump supports containing each node."""
    pts = domain.points()
    count = np.zeros(len(pts), np.int64)
    for k in family.ks:
        centers = family.bump_centers(k)
        if len(centers) == 0:
            continue
        tree = cKDTree(pts)
        for idx in tree.query_ball_point(centers, 0.5 * family.bump_radius(k)):
            count[idx] += 1
    return count.reshape(domain.shape)


def in_layers(family: BumpFamily, points, kmin: int) -> np.ndarray:
    """Mask of points in ``B_k`` for some ``k >= kmin`` within the family."""
    pts = np.atleast_2d(np.asarray(points, float))
    mask = np.zeros(len(pts), bool)
    for k in range(max(kmin, family.k0), family.kmax + 1):
        d = np.sqrt(np.sum((pts - family.layer_center(k)) ** 2, axis=1))
        mask |= d < family.layer_radius(k)
    return mask


def graph_map(family: BumpFamily, domain: BoxDomain) -> Field:
    """``f(x) = (x, gamma(x))``, a map into the graph of ``gamma``."""
    g = gamma_field(family, domain)
    return Field(domain, list(domain.mesh()) + [g.values[..., 0]])


def projection_pi_m(f: Field, family: BumpFamily, m: int, tol: float = 1e-8) -> Field:
    """Flatten the graph over ``B_{m+1}, B_{m+2}, ...`` to height 0."""
    n = family.n
    if f.nu != n + 1:
        raise ValueError("f must take values in R^{n+1}")
    flat = f.flat()
    base = flat[:, :n]
    gam = gamma_values(family, base)
    if np.max(np.abs(flat[:, n] - gam)) > tol:
        raise ValueError("f does not take values on the graph of gamma")
    out = flat.copy()
    out[in_layers(family, base, m + 1), n] = 0.0
    return Field(f.domain, out.reshape(f.values.shape))


PI_M_COLUMNS = ["m", "gap_w1n", "preimage_measure", "bound"]


def pi_m_table(family: BumpFamily, domain: BoxDomain, m_range) -> list:
    """``||f - pi_m o f||_{1,n}`` for the graph map of a gridded family.

    ``bound`` is ``H^n(f^{-1}(A_m))^{1/n} + (int_{f^{-1}(A_m)} |Df|^n)^{1/n}``.
    """
    n = family.n
    f = graph_map(family, domain)
    w = domain.weights().ravel()
    df = gradient(f).magnitude().ravel()
    base = f.flat()[:, :n]
    rows = []
    for m in m_range:
        g = projection_pi_m(f, family, m)
        gap = w1p_norm(f - g, n)
        pre = in_layers(family, base, m + 1)
        meas = float(np.sum(w[pre]))
        energy = float(np.sum(w[pre] * df[pre] ** n))
        rows.append({"m": m, "gap_w1n": gap, "preimage_measure": meas,
                     "bound": meas ** (1.0 / n) + energy ** (1.0 / n)})
    return rows


# --------------------------------------------------------------------------
# packing

def packing_count_log2(n: int, k: int, c_n: float = 1.0) -> float:
    """``log2`` of the number ``c(n) 2^{(k^2-k)(n+1)}`` of separated graph points."""
    return (k * k - k) * (n + 1) + math.log2(c_n)


def packing_count(n: int, k: int, c_n: int = 1) -> int:
    if k < 6:
        raise ValueError("layers start at k = 6")
    return int(c_n) * 2 ** ((k * k - k) * (n + 1))


def packing_lower_bound_log2(n: int, k: int, L: float, C: float = 1.0) -> float:
    """``log2`` of ``C (L^{-1} 2^{-k^2} / 2)^n 2^{(k^2-k)(n+1)}``.

    Exponents are combined as integers before the two real logarithms are
    added, so large ``k`` loses nothing.
    """
    if k < 6:
        raise ValueError("layers start at k = 6")
    if L <= 0:
        raise ValueError("L must be positive")
    exponent = (k * k - k) * (n + 1) - n * (k * k + 1)
    return exponent - n * math.log2(L) + math.log2(C)


def separated_points_on_graph(family: BumpFamily, k: int, separation: float,
                              sample_spacing: float | None = None) -> int:
    """Size of a greedy maximal ``separation``-separated subset of sampled
    graph points over the layer ball ``B_k``.

    Samples form a grid of step ``sample_spacing`` (default half the
    separation) over ``B_k``; points are taken in lexicographic order and
    kept when no kept point lies closer than ``separation``.
    """
    if k not in family.ks:
        raise ValueError(f"layer {k} outside the family")
    if separation <= 0:
        raise ValueError("separation must be positive")
    step = 0.5 * separation if sample_spacing is None else float(sample_spacing)
    if step > separation:
        raise ValueError("sampling is coarser than the separation")
    c, R = family.layer_center(k), family.layer_radius(k)
    m = int(math.floor(R / step))
    ax = np.arange(-m, m + 1) * step
    grid = np.stack([g.ravel() for g in np.meshgrid(*([ax] * family.n), indexing="ij")], -1)
    grid = grid[np.sum(grid ** 2, axis=1) <= R * R] + c
    pts = np.column_stack([grid, gamma_values(family, grid)])
    tree = cKDTree(pts)
    blocked = np.zeros(len(pts), bool)
    kept = 0
    for j in range(len(pts)):
        if blocked[j]:
            continue
        kept += 1
        blocked[tree.query_ball_point(pts[j], separation * (1 - 1e-9))] = True
    return kept


# --------------------------------------------------------------------------
# singular test map for the truncation sweep

def loglog_field(domain: BoxDomain, center=None, r_cap: float = 1e-6) -> Field:
    """Scalar ``log|log r|`` for ``r < 1/e`` and ``0`` beyond, with ``r``
    capped below at ``r_cap``: a single untruncated log-log bump.

    The default center is the middle of the grid cell at the origin, so no
    node samples the capped core.
    """
    if center is None:
        center = 0.5 * domain.spacing
    mesh = domain.mesh()
    disp = np.stack([m - c for m, c in zip(mesh, np.asarray(center, float))], -1)
    disp = domain.displacement(np.zeros(domain.n), disp)
    r = np.sqrt(np.sum(disp ** 2, axis=-1))
    r = np.clip(r, r_cap, math.exp(-1.0))
    return Field(domain, np.log(np.abs(np.log(r))))


def circle_loglog_field(domain: BoxDomain, center=None, r_cap: float = 1e-6) -> Field:
    """``(cos theta, sin theta)`` with ``theta`` the log-log field of
    ``loglog_field`` (same center and cap)."""
    theta = loglog_field(domain, center, r_cap).values[..., 0]
    return Field(domain, [np.cos(theta), np.sin(theta)])


def family_domain(family: BumpFamily, nodes_per_bump: float = 8.0, margin: float = 0.0) -> BoxDomain:
    """Non-periodic box around the family's layers with spacing
    ``smallest bump radius / nodes_per_bump``."""
    if family.n != 2:
        raise ValueError("gridded families are planar")
    h = min(family.bump_radius(k) for k in family.ks) / nodes_per_bump
    R0 = family.layer_radius(family.k0)
    lo = np.array([-R0 - margin, family.layer_center(family.kmax)[-1]
                   - family.layer_radius(family.kmax) - margin])
    hi = np.array([R0 + margin, family.layer_center(family.k0)[-1] + R0 + margin])
    lo = np.floor(lo / h) * h
    hi = np.ceil(hi / h) * h
    shape = tuple(int(round(v)) + 1 for v in (hi - lo) / h)
    return BoxDomain(tuple(lo), tuple(hi), shape)
