"""Acceptance suite: eleven end-to-end criteria, each with a runtime limit.

Run with ``pytest tests/test_acceptance.py -v`` (the terminal summary lists
one PASS/FAIL line per criterion) or directly with
``python tests/test_acceptance.py``.
"""
import math
import sys
import time

import numpy as np
import pytest

from lipdensity.constructions import capacity, flattening, phi_star, pyramid, wrinkles
from lipdensity.experiments import one_ball_field
from lipdensity.grid import BoxDomain, gradient_magnitude
from lipdensity.maximal import (GoodSetMask, dyadic_radii, maximal_function, partition_of_unity,
                                whitney_cover)
from lipdensity.truncation import SphereTarget, approximation_sweep, truncate

RESULTS = {}


def non_increasing(vals):
    return all(b <= a for a, b in zip(vals, vals[1:]))


def strictly_decreasing(vals):
    return all(b < a for a, b in zip(vals, vals[1:]))


def composition_discontinuity():
    rows = pyramid.composition_experiment(2.0, range(4, 11), 2048)
    gaps = [r["curve_gap_w1p"] for r in rows]
    der = [r["derivative_lp"] for r in rows]
    ok = strictly_decreasing(gaps) and gaps[-1] < 1e-2 and all(abs(d - 1) <= 0.02 for d in der)
    return ok, f"last curve gap {gaps[-1]:.2e}, derivative norms in [{min(der):.4f}, {max(der):.4f}]"


def capacity_oracle():
    errs = []
    for s in (2.0, 3.0, 4.0):
        exact = 2 * math.pi * (math.exp(-s) - math.exp(-(s + 1.0)))
        errs.append(abs(capacity.loglog_truncation_energy(2, s, 1.0) / exact - 1))
    return max(errs) <= 0.02, f"max relative error {max(errs):.2e}"


def scale_invariance():
    worst = 0.0
    for n in (2, 3):
        base = capacity.profile_energy_physical(n, 2.0, 1.0, 1e-2)
        for lam in (0.5, 0.25):
            worst = max(worst, abs(capacity.profile_energy_physical(n, 2.0, 1.0, 1e-2 * lam) / base - 1))
    return worst <= 1e-6, f"max relative change {worst:.2e}"


def gamma_ledger():
    fam = capacity.BumpFamily(n=2, k0=6, kmax=12, c_n=1.0)
    res = capacity.gamma_energy(fam)
    bound = sum(2.0 ** (-2 * k) for k in range(6, 13))
    layers_ok = all(r["layer_energy"] <= r["layer_budget"] for r in res["ledger"])
    ok = layers_ok and res["total"] <= bound and res["bound"] == pytest.approx(bound, rel=1e-15)
    return ok, f"total {res['total']:.3e} <= bound {bound:.3e}"


def whitney_properties():
    g = one_ball_field(128)
    M = maximal_function(g, dyadic_radii(g.domain))
    bounds, overlaps, sums = set(), [], []
    ok = True
    for t in (0.3, 0.5, 0.7):
        cover = whitney_cover(GoodSetMask.from_maximal(M, t))
        st = cover.check()
        ok &= st["a"] and st["b"] and st["c"] and st["d"]
        bounds.add(st["overlap_bound"])
        overlaps.append(st["overlap"])
        sums.append(partition_of_unity(cover).sum_error())
    ok &= len(bounds) == 1 and max(sums) <= 1e-10
    return ok, f"overlap {overlaps} <= {bounds}, partition error {max(sums):.1e}"


def truncation_sweep():
    d = BoxDomain.cube(2, 256, -0.5, 0.5, periodic=True)
    u = capacity.circle_loglog_field(d)
    radii = dyadic_radii(d)
    t_list = [2.0, 4.0, 8.0, 16.0, 32.0]
    rows = approximation_sweep(u, SphereTarget(2), t_list, radii)
    M = maximal_function(gradient_magnitude(u), radii)
    exact = True
    for t in t_list:
        res = truncate(u, t, maximal=M)
        exact &= bool(np.array_equal(res.u_t.values[res.good.mask], u.values[res.good.mask]))
    lt = [r["lip/t"] for r in rows]
    ok = (exact and all(r["status"] == "ok" for r in rows) and max(lt) / min(lt) <= 3
          and non_increasing([r["t^n*disagreement"] for r in rows])
          and non_increasing([r["sup_dist"] for r in rows])
          and non_increasing([r["retract_error_w1n"] for r in rows]))
    return ok, f"Lip/t ratio {max(lt) / min(lt):.2f}, exact on E_t: {exact}"


def sawtooth_length():
    lengths = [wrinkles.sawtooth_length(m, 8) for m in (6, 7, 8)]
    flat = wrinkles.flat_length()
    ok = all(abs(v / math.sqrt(2) - 1) <= 0.01 for v in lengths) and flat == 1.0
    return ok, f"lengths {[round(v, 12) for v in lengths]}, flat {flat}"


def packing_divergence():
    ok = True
    for n in (2, 3):
        for L in (1.0, 4.0):
            b = [capacity.packing_lower_bound_log2(n, k, L) for k in range(6, 17)]
            ok &= all(y > x for x, y in zip(b, b[1:]))
    return ok, "log2 bound strictly increasing for n in {2,3}, L in {1,4}"


def phi_star_checks():
    spec = phi_star.PhiStarSpec()
    rows = {r["check"]: r for r in phi_star.region_checks(spec, 10000, 0)}
    err = max(rows[k]["max_error"] for k in ("below_graph", "outside_band", "graph_to_zero"))
    speed = rows["monotone"]["min_derivative"]
    return err <= 1e-8 and speed >= 0.5 - 1e-3, f"identity error {err:.1e}, min speed {speed:.4f}"


def flattening_eta():
    spec = flattening.FlatteningSpec()
    rng = np.random.default_rng(0)
    t = rng.uniform(0.0, 4.0, 100)
    t = t[t > 0]
    part = float(np.max(np.abs(flattening.partition_sum(t) - 1)))
    tt = np.linspace(1.0, 4.0, 301)
    ident = float(np.max(np.abs(spec.eta(tt) - tt)))
    decay = [r["decay"] for r in flattening.flattening_report(spec, range(2, 11))]
    ok = part <= 1e-10 and ident <= 1e-10 and strictly_decreasing(decay) and decay[-1] < 1e-3
    return ok, f"partition {part:.1e}, identity {ident:.1e}, decay at level 10 {decay[-1]:.2e}"


def pi_m_convergence():
    fam = capacity.BumpFamily(n=2, k0=6, kmax=8, radius_law="shift:4", level_rule="plateau")
    rows = capacity.pi_m_table(fam, capacity.family_domain(fam, 8), range(5, 9))
    gaps = [r["gap_w1n"] for r in rows]
    return non_increasing(gaps) and gaps[-1] == 0.0, f"gaps {[f'{g:.3e}' for g in gaps]}"


CRITERIA = [
    (1, "composition discontinuity", composition_discontinuity, 30.0),
    (2, "n-capacity oracle", capacity_oracle, 1.0),
    (3, "scale invariance", scale_invariance, 5.0),
    (4, "gamma energy ledger", gamma_ledger, 5.0),
    (5, "Whitney cover properties", whitney_properties, 60.0),
    (6, "truncation sweep", truncation_sweep, 300.0),
    (7, "sawtooth length", sawtooth_length, 1.0),
    (8, "packing divergence", packing_divergence, 1.0),
    (9, "flattening homeomorphism checks", phi_star_checks, 10.0),
    (10, "radial flattening profile", flattening_eta, 10.0),
    (11, "projection convergence", pi_m_convergence, 60.0),
]


def evaluate(number, title, check, limit):
    t0 = time.perf_counter()
    ok, detail = check()
    elapsed = time.perf_counter() - t0
    passed = bool(ok) and elapsed < limit
    line = (f"{'PASS' if passed else 'FAIL'} criterion {number:2d} ({title}): {detail}; "
            f"{elapsed:.2f}s of {limit:g}s")
    RESULTS[number] = line
    return passed, line


@pytest.mark.parametrize("number,title,check,limit", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, check, limit):
    passed, line = evaluate(number, title, check, limit)
    print(line)
    assert passed, line


if __name__ == "__main__":
    failed = 0
    for crit in CRITERIA:
        passed, line = evaluate(*crit)
        print(line, flush=True)
        failed += not passed
    sys.exit(1 if failed else 0)
