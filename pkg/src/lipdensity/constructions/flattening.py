"""A radial flattening profile ``eta``: a homeomorphism of ``[0, inf)`` that
is the identity on ``[1, inf)`` and whose derivatives die off at the origin
faster than any prescribed sequence ``N_n`` grows.

Ingredients:

* ``phi`` is a smooth bump on ``[1/2, 2]`` normalised so that its dyadic
  dilates ``phi(2^n t)`` sum to one;
* ``psi(t) = sum_n a_n phi(2^n t)`` with ``a_n = 1`` for ``n <= 1`` and
  ``a_n = 2^{-2 n^2} / (N_n M_n)`` beyond, ``M_n`` a bound for the first
  derivatives of ``phi``;
* ``eta~(t) = int_0^t psi`` equals ``t - a`` on ``[1, inf)``, and
  ``eta = eta~ + a * delta`` with ``delta`` a smooth step from 0 on
  ``[0, 1/2]`` to 1 on ``[3/4, inf)``.

Derivatives of ``phi`` are taken by central finite differences, with orders
capped at 4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

MAX_ORDER = 4
# dyadic indices carried in the sums; coefficients below this underflow anyway
_N_LOW, _N_HIGH = -4, 40

# central difference stencils (offsets, weights) for derivative orders 1..4
_FD = {
    1: (np.array([-2, -1, 1, 2]), np.array([1, -8, 8, -1]) / 12.0),
    2: (np.array([-2, -1, 0, 1, 2]), np.array([-1, 16, -30, 16, -1]) / 12.0),
    3: (np.array([-3, -2, -1, 1, 2, 3]), np.array([1, -8, 13, -13, 8, -1]) / 8.0),
    4: (np.array([-3, -2, -1, 0, 1, 2, 3]), np.array([-1, 12, -39, 56, -39, 12, -1]) / 6.0),
}


def bump_raw(t) -> np.ndarray:
    """``exp(-1 / ((t - 1/2)(2 - t)))`` on ``(1/2, 2)``, zero elsewhere."""
    t = np.asarray(t, float)
    q = (t - 0.5) * (2.0 - t)
    inside = q > 0
    return np.where(inside, np.exp(-1.0 / np.where(inside, q, 1.0)), 0.0)


def _dyadic_window(t):
    """Exponents ``n`` with ``2^n t`` possibly inside ``(1/2, 2)``."""
    base = np.floor(-np.log2(t)).astype(np.int64)
    return base[..., None] + np.arange(-2, 3)


def partition_bump(t) -> np.ndarray:
    """``phi(t) = bump_raw(t) / sum_n bump_raw(2^n t)`` for ``t > 0``."""
    t = np.asarray(t, float)
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    ns = _dyadic_window(tp)
    alpha = np.sum(bump_raw(np.ldexp(tp[..., None], ns)), axis=-1)
    num = bump_raw(tp)
    out[pos] = np.where(num > 0, num / np.where(alpha > 0, alpha, 1.0), 0.0)
    return out


def partition_sum(t) -> np.ndarray:
    """``sum_n phi(2^n t)``, which should be 1 for every ``t > 0``."""
    t = np.asarray(t, float)
    ns = _dyadic_window(t)
    return np.sum(partition_bump(np.ldexp(t[..., None], ns)), axis=-1)


def bump_derivative(u, order: int, step: float = 1e-3) -> np.ndarray:
    """``phi^{(order)}(u)`` by a fourth-order central difference (order 0 is ``phi``)."""
    if order == 0:
        return partition_bump(u)
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"derivative order capped at {MAX_ORDER}")
    u = np.asarray(u, float)
    offs, w = _FD[order]
    vals = partition_bump(u[..., None] + step * offs)
    return np.sum(w * vals, axis=-1) / step ** order


def smooth_step(t) -> np.ndarray:
    """Smooth nondecreasing ``delta``: 0 for ``t <= 1/2``, 1 for ``t >= 3/4``."""
    x = (np.asarray(t, float) - 0.5) * 4.0

    def e(y):
        return np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)

    a, b = e(x), e(1.0 - x)
    return a / (a + b)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def bump_integral(u) -> np.ndarray:
    """``Phi(u) = int_0^u phi`` by 32-panel Gauss-Legendre on ``[1/2, min(u, 2)]``."""
    u = np.clip(np.asarray(u, float), 0.5, 2.0)
    edges = 0.5 + (u[..., None] - 0.5) * np.linspace(0.0, 1.0, 33)
    lo, hi = edges[..., :-1, None], edges[..., 1:, None]
    x = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
    return np.sum(0.5 * (hi - lo) * _GL_W * partition_bump(x), axis=(-2, -1))


@dataclass(frozen=True)
class FlatteningSpec:
    """Target growth ``N_n = 2^{log2_N(n)}`` (default ``2^{n^2}``).

    ``a_n`` for ``n >= 2`` is ``2^{-2n^2} / (N_n M_n)`` with
    ``M_n = max_{l <= min(n-1, 4)} ||phi^{(l)}||_inf``.
    """

    log2_N: object = field(default=lambda n: float(n * n))
    n_high: int = _N_HIGH

    @cached_property
    def bump_sup(self) -> np.ndarray:
        """``||phi^{(l)}||_inf`` for ``l = 0..4`` on a dense sample of ``[1/2, 2]``."""
        u = np.linspace(0.5, 2.0, 6001)
        return np.array([np.max(np.abs(bump_derivative(u, l))) for l in range(MAX_ORDER + 1)])

    def M(self, n: int) -> float:
        return float(np.max(self.bump_sup[: min(n - 1, MAX_ORDER) + 1]))

    def log2_a(self, n: int) -> float:
        if n <= 1:
            return 0.0
        return -2.0 * n * n - self.log2_N(n) - math.log2(self.M(n))

    @cached_property
    def coefficients(self) -> dict:
        """``n -> a_n`` for ``n`` in the carried window (underflow gives 0)."""
        return {n: 2.0 ** self.log2_a(n) for n in range(_N_LOW, self.n_high + 1)}

    @cached_property
    def _total(self) -> float:
        """``int phi``; every term with ``2^n t >= 2`` contributes ``a_n 2^-n`` times this."""
        return float(bump_integral(2.0))

    def _sum(self, t, term):
        t = np.atleast_1d(np.asarray(t, float))
        out = np.zeros_like(t)
        for n, an in self.coefficients.items():
            if an == 0.0:
                continue
            out += an * term(n, np.ldexp(t, n))
        return out

    def _partial_integral(self, u):
        out = np.where(u >= 2.0, self._total, 0.0)
        mid = (u > 0.5) & (u < 2.0)
        if mid.any():
            out[mid] = bump_integral(u[mid])
        return out

    def psi(self, t) -> np.ndarray:
        return self._sum(t, lambda n, u: partition_bump(u))

    def eta_tilde(self, t) -> np.ndarray:
        """``int_0^t psi`` summed dyadic piece by piece; ``t`` beyond the
        carried window uses ``eta~(t) = eta~(1) + (t - 1)``."""
        t = np.atleast_1d(np.asarray(t, float))
        big = t > 1.0
        base = np.where(big, 1.0, t)
        out = self._sum(base, lambda n, u: 2.0 ** (-n) * self._partial_integral(u))
        return out + np.where(big, t - 1.0, 0.0)

    @cached_property
    def shift(self) -> float:
        """``a = 1 - eta~(1)``."""
        return float(1.0 - self.eta_tilde(1.0)[0])

    def eta(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, float))
        if np.any(t < 0):
            raise ValueError("eta is defined on [0, inf)")
        return np.where(t >= 1.0, t, self.eta_tilde(t) + self.shift * smooth_step(t))

    def eta_derivative(self, t, order: int) -> np.ndarray:
        """``eta^{(order)}`` for ``t <= 1/2`` (where ``eta = eta~``)."""
        if order == 0:
            return self.eta(t)
        t = np.atleast_1d(np.asarray(t, float))
        if np.any(t > 0.5):
            raise ValueError("closed-form derivatives are used on (0, 1/2] only")
        l = order - 1
        return self._sum(t, lambda n, u: 2.0 ** (n * l) * bump_derivative(u, l))


FLATTEN_COLUMNS = ["level", "N_log2", "max_order", "decay"]


def flattening_report(spec: FlatteningSpec, levels=range(2, 11), samples_per_octave: int = 64,
                      octaves: int = 6) -> list:
    """``N_n sup_{0 < t <= 2^-n} max_{l <= min(n, 4)} |eta^{(l)}(t)|`` per level.

    The sup is taken over ``octaves`` dyadic octaves below ``2^-n``; the
    coefficients shrink so fast that deeper octaves cannot raise it.
    """
    rows = []
    for n in levels:
        k = np.arange(octaves * samples_per_octave + 1) / samples_per_octave
        t = 2.0 ** (-n - k)
        best = 0.0
        for l in range(min(n, MAX_ORDER) + 1):
            best = max(best, float(np.max(np.abs(spec.eta_derivative(t, l)))))
        logN = spec.log2_N(n)
        rows.append({"level": n, "N_log2": logN, "max_order": min(n, MAX_ORDER),
                     "decay": best * 2.0 ** logN})
    return rows


def monotone_on_dyadics(spec: FlatteningSpec, max_level: int = 12, per_level: int = 16) -> bool:
    """``eta`` strictly increasing on ``j 2^-L`` points for levels ``0..max_level`` and up to 2."""
    pts = [2.0 ** (-max_level - 1)]
    for L in range(max_level, -2, -1):
        lo = 2.0 ** (-L - 1)
        pts.extend(lo + lo * np.arange(1, per_level + 1) / per_level)
    t = np.unique(np.asarray(pts))
    v = spec.eta(t)
    return bool(np.all(np.diff(v) > 0))
