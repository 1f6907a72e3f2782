"""A homeomorphism ``(x', x_v) -> (x', xi(x', x_v))`` that flattens the graph
of a nonnegative profile ``lambda`` onto the hyperplane ``x_v = 0``.

With ``f = 4 lambda + |x'|^2`` the vertical speed is ``1 + g + h`` where
``g`` removes mass ``lambda`` from ``[-f, 0]`` and ``h`` puts it back on
``[lambda, f]``; ``xi`` integrates that speed from ``lambda(x')``.  Since
``lambda <= f / 4`` and the helper bump stays below 2, the speed never
drops below 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

_S_NORM = integrate.quad(lambda s: math.exp(-1.0 / (1.0 - s * s)), -1.0, 1.0,
                         epsabs=0.0, epsrel=1e-13)[0]


def helper_bump(tau) -> np.ndarray:
    """Smooth bump on ``[0, 1]`` with unit integral (peak about 1.66)."""
    tau = np.asarray(tau, float)
    s = 2.0 * tau - 1.0
    inside = np.abs(s) < 1.0
    q = np.where(inside, 1.0 - s * s, 1.0)
    return np.where(inside, np.exp(-1.0 / q), 0.0) * (2.0 / _S_NORM)


def helper_cumulative(tau) -> np.ndarray:
    """``int_0^tau helper_bump`` (by adaptive quadrature, element-wise)."""
    tau = np.clip(np.asarray(tau, float), 0.0, 1.0)
    flat = tau.ravel()
    out = np.array([integrate.quad(lambda x: float(helper_bump(x)), 0.0, t,
                                   epsabs=1e-15, epsrel=1e-13)[0] if 0 < t < 1 else float(t >= 1)
                    for t in flat])
    return out.reshape(tau.shape)


def default_lambda(xp) -> np.ndarray:
    """``2^-5 sin^2(8 pi |x'|)`` for ``|x'| < 1/8``, zero beyond."""
    r = np.linalg.norm(np.atleast_2d(np.asarray(xp, float)), axis=-1)
    return np.where(r < 0.125, 2.0 ** -5 * np.sin(8 * np.pi * r) ** 2, 0.0)


@dataclass(frozen=True)
class PhiStarSpec:
    """Profile ``lambda`` on ``R^{v-1}`` (vectorised over rows of ``x'``)."""

    profile: object = field(default=default_lambda)
    dim: int = 2
    nodes: int = 48

    def lam(self, xp) -> np.ndarray:
        return np.asarray(self.profile(self._xp(xp)), float)

    def _xp(self, xp):
        xp = np.atleast_2d(np.asarray(xp, float))
        if xp.shape[-1] != self.dim - 1:
            raise ValueError(f"x' must have {self.dim - 1} coordinates")
        return xp

    def f(self, xp) -> np.ndarray:
        xp = self._xp(xp)
        return 4.0 * self.lam(xp) + np.sum(xp ** 2, axis=-1)

    def speed(self, lam, f, tau) -> np.ndarray:
        """``1 + g + h`` at heights ``tau`` (broadcast against ``lam``, ``f``)."""
        safe_f = np.where(f > 0, f, 1.0)
        gap = np.where(f - lam > 0, f - lam, 1.0)
        g = -lam / safe_f * helper_bump((tau + f) / safe_f)
        h = lam / gap * helper_bump((tau - lam) / gap)
        return 1.0 + np.where(f > 0, g + h, 0.0)


def _gl_integral(spec: PhiStarSpec, lam, f, a, b, nodes: int) -> np.ndarray:
    """``int_a^b speed`` split at ``-f, 0, lambda, f``; ``a``, ``b`` arrays."""
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    cuts = np.stack([lo, np.clip(-f, lo, hi), np.clip(0.0 * f, lo, hi),
                     np.clip(lam, lo, hi), np.clip(f, lo, hi), hi], -1)
    cuts = np.sort(cuts, axis=-1)
    left, right = cuts[:, :-1, None], cuts[:, 1:, None]
    half = 0.5 * (right - left)
    tau = half * gx + 0.5 * (right + left)
    vals = spec.speed(lam[:, None, None], f[:, None, None], tau)
    total = np.sum(half * gw * vals, axis=(1, 2))
    return np.where(b >= a, total, -total)


def xi(spec: PhiStarSpec, xp, xv, tol: float = 1e-11) -> np.ndarray:
    """``int_{lambda(x')}^{x_v} (1 + g + h)``; ``x' = 0`` gives ``x_v``.

    Piecewise Gauss-Legendre on the pieces cut by ``-f, 0, lambda, f``,
    repeated with twice the nodes; a disagreement above ``tol`` raises.
    """
    xp = spec._xp(xp)
    xv = np.broadcast_to(np.asarray(xv, float), (len(xp),))
    lam, f = spec.lam(xp), spec.f(xp)
    origin = f == 0
    coarse = _gl_integral(spec, lam, f, lam, xv, spec.nodes)
    fine = _gl_integral(spec, lam, f, lam, xv, 2 * spec.nodes)
    err = np.abs(fine - coarse)
    if np.any(err[~origin] > tol):
        raise RuntimeError(f"xi quadrature did not converge (difference {err.max():.3e})")
    return np.where(origin, xv, fine)


def xi_closed_form(spec: PhiStarSpec, xp, xv) -> np.ndarray:
    """``x_v - lambda C((x_v + f)/f) + lambda C((x_v - lambda)/(f - lambda))``
    with ``C`` the helper's cumulative integral; an independent oracle."""
    xp = spec._xp(xp)
    xv = np.broadcast_to(np.asarray(xv, float), (len(xp),))
    lam, f = spec.lam(xp), spec.f(xp)
    out = np.array(xv, float)
    pos = f > 0
    cg = helper_cumulative((xv[pos] + f[pos]) / f[pos])
    gap = f[pos] - lam[pos]
    ch = helper_cumulative((xv[pos] - lam[pos]) / gap)
    out[pos] = xv[pos] - lam[pos] * cg + lam[pos] * ch
    return out


def phi_star(spec: PhiStarSpec, points) -> np.ndarray:
    """Apply ``(x', x_v) -> (x', xi(x', x_v))`` to rows of ``points``."""
    pts = np.atleast_2d(np.asarray(points, float))
    out = pts.copy()
    out[:, -1] = xi(spec, pts[:, :-1], pts[:, -1])
    return out


def sample_points(spec: PhiStarSpec, count: int, rng, spread: float = 1.5) -> np.ndarray:
    """Points with ``|x'| < 1/8`` and ``x_v`` within ``spread * f(x')`` of 0."""
    rng = np.random.default_rng(rng)
    k = spec.dim - 1
    dirs = rng.normal(size=(count, k))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = 0.125 * rng.random(count) ** (1.0 / k)
    xp = dirs * r[:, None]
    f = spec.f(xp)
    xv = spread * f * rng.uniform(-1.0, 1.0, count)
    return np.column_stack([xp, xv])


def jacobian_check(spec: PhiStarSpec, samples: int, rng=None, rel_step: float = 1e-4) -> float:
    """Minimum over random points of the central difference of ``xi`` in ``x_v``,
    with step ``rel_step * f(x')``."""
    pts = sample_points(spec, samples, rng)
    pts = pts[spec.f(pts[:, :-1]) > 0]
    xp, xv = pts[:, :-1], pts[:, -1]
    step = rel_step * spec.f(xp)
    d = (xi(spec, xp, xv + step) - xi(spec, xp, xv - step)) / (2 * step)
    return float(d.min())


PHI_STAR_COLUMNS = ["check", "samples", "max_error", "min_derivative"]


def region_checks(spec: PhiStarSpec, samples: int, rng=None) -> list:
    """Rows for the three region identities and the derivative bound."""
    rng = np.random.default_rng(rng)
    pts = sample_points(spec, samples, rng)
    xp = pts[:, :-1]
    lam, f = spec.lam(xp), spec.f(xp)
    keep = f > 0
    xp, lam, f = xp[keep], lam[keep], f[keep]
    u = rng.random(len(xp))
    rows = []
    # 0 <= x_v <= lambda
    xv = u * lam
    rows.append({"check": "below_graph", "samples": len(xv),
                 "max_error": float(np.max(np.abs(xi(spec, xp, xv) - (xv - lam))))})
    # |x_v| >= f
    sign = np.where(rng.random(len(xp)) < 0.5, -1.0, 1.0)
    xv = sign * f * (1.0 + u)
    rows.append({"check": "outside_band", "samples": len(xv),
                 "max_error": float(np.max(np.abs(xi(spec, xp, xv) - xv)))})
    rows.append({"check": "graph_to_zero", "samples": len(lam),
                 "max_error": float(np.max(np.abs(xi(spec, xp, lam))))})
    rows.append({"check": "monotone", "samples": samples,
                 "min_derivative": jacobian_check(spec, samples, rng)})
    return rows
