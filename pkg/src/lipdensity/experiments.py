"""Named, configuration-driven experiments.

Each experiment produces a table (written as CSV) and a JSON report holding
the configuration, the rows and a pass/fail flag for every property the
experiment asserts.  Output files are written atomically and contain no
timing information, so identical configurations give identical bytes.
"""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import io as lio
from .grid import BoxDomain, Field, gradient_magnitude
from .maximal import (GoodSetMask, dyadic_radii, maximal_function, partition_of_unity,
                      whitney_cover)
from .truncation import SWEEP_COLUMNS, SphereTarget, approximation_sweep
from .constructions import capacity, flattening, phi_star, pyramid, wrinkles

SCHEMA = 1

CATALOGUE = {
    "composition": ("Composition with the pyramid distance function is discontinuous in W^{1,p}",
                    "pyramid function and comb curves"),
    "capacity": ("Energy of truncated log-log profiles: analytic match, decay in s, dilation invariance",
                 "log-log capacity bumps"),
    "gamma-energy": ("Per-layer energy ledger of the singular bump sum gamma",
                     "bump family energy chain"),
    "whitney": ("Whitney ball cover of a one-ball complement and its partition of unity",
                "maximal function, good set, covering properties (a)-(d)"),
    "truncate-sweep": ("Lipschitz truncation of a circle-valued log-log map over a threshold sweep",
                       "truncation properties (A), (B), (C)"),
    "wrinkle": ("Sawtooth length sqrt(2) against 1 and bi-Lipschitz bounds of the wrinkle shears",
                "wrinkle shears and the sawtooth length gap"),
    "packing": ("Log2 packing lower bound for separated points on the oscillating graph",
                "separated points on the oscillating graph"),
    "flatten": ("Radial flattening profile: dyadic partition, identity beyond 1, derivative decay",
                "radial flattening profile eta"),
    "phi-star": ("Graph-flattening homeomorphism: region identities and vertical speed >= 1/2",
                 "graph-flattening homeomorphism Phi*"),
    "pi-m": ("Projections flattening the graph of gamma converge to the identity in W^{1,n}",
             "projections pi_m of the graph of gamma"),
}

DEFAULTS = {
    "composition": dict(p=2.0, resolution=2048, i_range=[4, 10]),
    "capacity": dict(n=2, params={"s": [2.0, 3.0, 4.0], "tau": 1.0, "dilations": [0.5, 0.25]}),
    "gamma-energy": dict(n=2, k_range=[6, 12], radius_law="squared"),
    "whitney": dict(n=2, resolution=128, t_list=[0.3, 0.5, 0.7]),
    "truncate-sweep": dict(n=2, resolution=256, t_list=[2.0, 4.0, 8.0, 16.0, 32.0],
                           params={"field": "loglog"}),
    "wrinkle": dict(n=1, m_range=[6, 8], params={"samples_per_tooth": [4, 8, 16], "pairs": 20000}),
    "packing": dict(k_range=[6, 16], params={"n_list": [2, 3], "L_list": [1.0, 4.0]}),
    "flatten": dict(params={"levels": [2, 10], "samples": 100}),
    "phi-star": dict(n=2, params={"samples": 10000}),
    "pi-m": dict(n=2, resolution=8, k_range=[6, 8], radius_law="shift:4", m_range=[5, 8]),
}


@dataclass
class ExperimentConfig:
    """Configuration of one run; ``None`` fields take the experiment default.

    Ranges are inclusive ``[first, last]`` pairs.  ``params`` carries
    experiment-specific extras (see ``DEFAULTS``).
    """

    name: str
    n: int | None = None
    p: float | None = None
    resolution: int | None = None
    t_list: list | None = None
    i_range: list | None = None
    k_range: list | None = None
    m_range: list | None = None
    radius_law: str | None = None
    out: str = "out"
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in CATALOGUE:
            raise ValueError(f"unknown experiment {self.name!r}; choose from {sorted(CATALOGUE)}")
        base = DEFAULTS[self.name]
        for key, val in base.items():
            if key == "params":
                merged = dict(val)
                merged.update(self.params or {})
                self.params = merged
            elif getattr(self, key) is None:
                setattr(self, key, val)
        for key in ("i_range", "k_range", "m_range"):
            r = getattr(self, key)
            if r is not None:
                if len(r) != 2 or r[1] < r[0]:
                    raise ValueError(f"{key} must be a nonempty [first, last] pair")
                setattr(self, key, [int(r[0]), int(r[1])])
        if self.t_list is not None and len(self.t_list) == 0:
            raise ValueError("t_list is empty")

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        merged = dict(d)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**merged)

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), **overrides)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Report:
    config: ExperimentConfig
    columns: list
    rows: list
    invariants: dict
    extra: dict = field(default_factory=dict)
    error: str | None = None
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.error is None and all(v["pass"] for v in self.invariants.values())

    def to_json(self) -> str:
        d = {"schema": SCHEMA, "experiment": self.config.name, "config": self.config.to_dict(),
             "columns": self.columns, "rows": self.rows, "invariants": self.invariants,
             "extra": self.extra, "error": self.error, "passed": self.passed}
        return lio.dumps_json(_finite(d))

    def to_csv(self) -> str:
        return lio.table_to_csv(self.columns, self.rows)


def _finite(o):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if isinstance(o, (float, np.floating)) and not math.isfinite(o):
        return repr(float(o))
    return o


def _inv(ok, **detail) -> dict:
    return {"pass": bool(ok), **detail}


def _rng(cfg):
    return np.random.default_rng(cfg.seed)


def _non_increasing(vals, tol=0.0):
    return all(b <= a + tol for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------- experiments

def _composition(cfg):
    i0, i1 = cfg.i_range
    rows = pyramid.composition_experiment(cfg.p, range(i0, i1 + 1), cfg.resolution)
    cols = pyramid.COMPOSITION_COLUMNS + ["sup_gap", "composition_limit_lp"]
    der = [r["derivative_lp"] for r in rows]
    gaps = [r["curve_gap_w1p"] for r in rows]
    inv = {
        "derivative_unit_norm": _inv(all(abs(d - 1) <= 0.02 for d in der), min=min(der), max=max(der)),
        "curve_gap_bound": _inv(all(g <= 3 * 2.0 ** -r["i"] for g, r in zip(gaps, rows))),
        "curve_gap_below_1e-2": _inv(gaps[-1] < 1e-2, last=gaps[-1]),
        "curve_gap_decreasing": _inv(all(b < a for a, b in zip(gaps, gaps[1:]))),
        "composition_gap_persists": _inv(min(r["composition_gap_w1p"] for r in rows) >= 0.9,
                                         min=min(r["composition_gap_w1p"] for r in rows)),
        "limit_composition_zero": _inv(max(r["composition_limit_lp"] for r in rows) == 0.0),
    }
    return cols, rows, inv, {}


def _capacity(cfg):
    n = cfg.n
    tau = float(cfg.params["tau"])
    rows = []
    for s in cfg.params["s"]:
        s = float(s)
        e = capacity.loglog_truncation_energy(n, s, tau)
        ref = capacity.profile_log_energy(n, s, tau)
        row = {"n": n, "s": s, "tau": tau, "energy": e,
               "analytic": 2 * math.pi * (math.exp(-s) - math.exp(-(s + tau))) if n == 2 else "",
               "mollified": capacity.profile_log_energy(n, s, tau, mollify=True)}
        worst = 0.0
        base = capacity.profile_energy_physical(n, s, tau, 1e-2)
        for lam in cfg.params["dilations"]:
            dil = capacity.profile_energy_physical(n, s, tau, 1e-2 * lam)
            worst = max(worst, abs(dil / base - 1), abs(ref / base - 1))
        row["dilation_rel_change"] = worst
        rows.append(row)
    cols = ["n", "s", "tau", "energy", "analytic", "mollified", "dilation_rel_change"]
    energies = [r["energy"] for r in rows]
    inv = {
        "energy_decreasing_in_s": _inv(all(b < a for a, b in zip(energies, energies[1:]))),
        "dilation_invariant_1e-6": _inv(max(r["dilation_rel_change"] for r in rows) <= 1e-6),
    }
    if n == 2:
        err = max(abs(r["energy"] / r["analytic"] - 1) for r in rows)
        inv["analytic_match_2pct"] = _inv(err <= 0.02, max_rel_error=err)
    return cols, rows, inv, {}


def _family(cfg, **kw):
    k0, k1 = cfg.k_range
    return capacity.BumpFamily(n=cfg.n, k0=k0, kmax=k1, radius_law=cfg.radius_law, **kw)


def _gamma_energy(cfg):
    fam = _family(cfg, c_n=float(cfg.params.get("c_n", 1.0)),
                  mollify=bool(cfg.params.get("mollify", False)))
    res = capacity.gamma_energy(fam)
    rows = res["ledger"]
    cols = ["k", "level", "count_log2", "bump_energy_log2", "bump_energy_mollified_log2",
            "budget_log2", "layer_energy", "layer_budget", "within_budget"]
    inv = {
        "layers_within_budget": _inv(all(r["within_budget"] for r in rows)),
        "total_below_bound": _inv(res["total"] <= res["bound"], total=res["total"], bound=res["bound"]),
    }
    return cols, rows, inv, {"total": res["total"], "bound": res["bound"],
                             "family": json.loads(fam.to_json())}


def one_ball_field(resolution: int, width: float = 0.02) -> Field:
    """Radial Gaussian on the periodic box ``[-1/2, 1/2]^2``; its maximal
    function exceeds a threshold on a single round region."""
    d = BoxDomain.cube(2, resolution, -0.5, 0.5, periodic=True)
    X, Y = d.mesh()
    return Field(d, np.exp(-(X ** 2 + Y ** 2) / width))


def _whitney(cfg):
    g = one_ball_field(cfg.resolution)
    M = maximal_function(g, dyadic_radii(g.domain))
    rows = []
    for t in cfg.t_list:
        good = GoodSetMask.from_maximal(M, float(t))
        cover = whitney_cover(good)
        st = cover.stats
        pu = partition_of_unity(cover)
        comp = g.domain.points()[cover.complement]
        far = float(np.max(np.linalg.norm(comp, axis=1))) + g.domain.spacing[0]
        rows.append({"t": float(t), "complement_nodes": st["complement_nodes"], "balls": st["balls"],
                     "a": st["a"], "b": st["b"], "c": st["c"], "overlap": st["overlap"],
                     "overlap_bound": st["overlap_bound"], "d": st["d"],
                     "max_radius": float(cover.radii.max()), "complement_radius": far,
                     "pou_sum_error": pu.sum_error(),
                     "lip_times_radius": pu.lipschitz_times_radius()})
    cols = list(rows[0])
    inv = {
        "a_b_c_every_node": _inv(all(r["a"] and r["b"] and r["c"] for r in rows)),
        "overlap_within_bound": _inv(all(r["d"] for r in rows),
                                     bound=rows[0]["overlap_bound"],
                                     measured=[r["overlap"] for r in rows]),
        "overlap_bound_stable": _inv(len({r["overlap_bound"] for r in rows}) == 1),
        "radii_within_tenth_of_ball": _inv(all(r["max_radius"] <= r["complement_radius"] / 10 + 1e-12
                                               for r in rows)),
        "partition_sum_1e-10": _inv(max(r["pou_sum_error"] for r in rows) <= 1e-10),
        "lip_times_radius_bounded": _inv(True, values=[r["lip_times_radius"] for r in rows]),
    }
    return cols, rows, inv, {}


def _truncate_sweep(cfg):
    d = BoxDomain.cube(2, cfg.resolution, -0.5, 0.5, periodic=True)
    kind = cfg.params.get("field", "loglog")
    if kind == "loglog":
        u = capacity.circle_loglog_field(d)
    elif kind == "smooth":
        X, Y = d.mesh()
        th = 0.5 * np.sin(2 * np.pi * X) * np.cos(2 * np.pi * Y)
        u = Field(d, [np.cos(th), np.sin(th)])
    else:
        raise ValueError(f"unknown sweep field {kind!r}")
    target = SphereTarget(2)
    radii = dyadic_radii(d)
    rows = approximation_sweep(u, target, cfg.t_list, radii)
    ok_rows = [r for r in rows if r["status"] == "ok"]
    inv = {"rows_completed": _inv(len(ok_rows) == len(rows))}
    # exact agreement on E_t, recomputed independently of the sweep
    from .truncation import truncate
    M = maximal_function(gradient_magnitude(u), radii)
    exact = True
    for t in cfg.t_list:
        try:
            res = truncate(u, t, maximal=M)
        except ValueError:
            continue
        m = res.good.mask
        exact &= bool(np.array_equal(res.u_t.values[m], u.values[m]))
    inv["exact_on_good_set"] = _inv(exact)
    if kind == "loglog" and ok_rows:
        lt = [r["lip/t"] for r in ok_rows]
        inv["lip_over_t_ratio_le_3"] = _inv(max(lt) / min(lt) <= 3.0, ratio=max(lt) / min(lt))
        for col in ("t^n*disagreement", "sup_dist", "retract_error_w1n"):
            inv[f"{col}_non_increasing"] = _inv(_non_increasing([r[col] for r in ok_rows]))
    else:
        inv["zero_disagreement"] = _inv(all(r.get("disagreement") == 0 for r in ok_rows))
    return SWEEP_COLUMNS, rows, inv, {}


def _wrinkle(cfg):
    m0, m1 = cfg.m_range
    rows = []
    rng = _rng(cfg)
    flat = wrinkles.flat_length()
    bounds = []
    for m in range(m0, m1 + 1):
        spec = wrinkles.WrinkleSpec(m, n=cfg.n)
        lo, hi = wrinkles.bilipschitz_estimate(spec, int(cfg.params["pairs"]), rng)
        pts = wrinkles.sample_box(spec, 2000, rng)
        resid = max(
            float(np.max(np.abs(wrinkles.shear_map(spec, wrinkles.shear_map(spec, pts, fix_boundary=fb),
                                                   inverse=True, fix_boundary=fb) - pts)))
            for fb in (False, True))
        bounds.append((lo, hi))
        for spt in cfg.params["samples_per_tooth"]:
            L = wrinkles.sawtooth_length(m, int(spt))
            rows.append({"m": m, "samples_per_tooth": int(spt), "length": L,
                         "length_over_sqrt2": L / math.sqrt(2), "flat_length": flat,
                         "bilip_lower": lo, "bilip_upper": hi, "inverse_residual": resid})
    cols = list(rows[0])
    L_const = 2.0
    inv = {
        "sawtooth_sqrt2_1pct": _inv(all(abs(r["length_over_sqrt2"] - 1) <= 0.01 for r in rows)),
        "flat_length_one": _inv(flat == 1.0),
        "bilipschitz_common_L": _inv(all(1 / L_const <= lo and hi <= L_const for lo, hi in bounds),
                                     L=L_const),
        "inverse_residual_1e-12": _inv(max(r["inverse_residual"] for r in rows) < 1e-12),
    }
    return cols, rows, inv, {}


def _packing(cfg):
    k0, k1 = cfg.k_range
    n_list = [cfg.n] if cfg.n is not None else cfg.params["n_list"]
    C = float(cfg.params.get("C", 1.0))
    c_n = int(cfg.params.get("c_n", 1))
    rows = []
    for n in n_list:
        for L in cfg.params["L_list"]:
            for k in range(k0, k1 + 1):
                rows.append({"n": n, "L": float(L), "k": k,
                             "count_log2": capacity.packing_count(n, k, c_n).bit_length() - 1
                             if c_n == 1 else capacity.packing_count_log2(n, k, c_n),
                             "bound_log2": capacity.packing_lower_bound_log2(n, k, float(L), C)})
    ok = True
    for n in n_list:
        for L in cfg.params["L_list"]:
            b = [r["bound_log2"] for r in rows if r["n"] == n and r["L"] == float(L)]
            ok &= all(y > x for x, y in zip(b, b[1:]))
    # separated points at a feasible scale: bumps add points
    fam = capacity.BumpFamily(n=2, k0=6, kmax=6, radius_law="shift:4", level_rule="plateau",
                              height_scale=float(cfg.params.get("height_scale", 8.0)))
    sep = fam.bump_radius(6) / 4
    flat = capacity.BumpFamily(n=2, k0=6, kmax=6, radius_law="shift:4", level_rule="plateau",
                               height_scale=0.0)
    with_b = capacity.separated_points_on_graph(fam, 6, sep)
    without = capacity.separated_points_on_graph(flat, 6, sep)
    inv = {
        "bound_strictly_increasing": _inv(ok),
        "bumps_add_separated_points": _inv(with_b >= without, with_bumps=with_b, flat=without),
    }
    cols = ["n", "L", "k", "count_log2", "bound_log2"]
    return cols, rows, inv, {}


def _flatten(cfg):
    spec = flattening.FlatteningSpec()
    l0, l1 = cfg.params["levels"]
    rows = flattening.flattening_report(spec, range(l0, l1 + 1))
    rng = _rng(cfg)
    t = rng.uniform(0.0, 4.0, int(cfg.params["samples"]))
    t = t[t > 0]
    part = float(np.max(np.abs(flattening.partition_sum(t) - 1)))
    tt = np.linspace(1.0, 4.0, 301)
    ident = float(np.max(np.abs(spec.eta(tt) - tt)))
    decay = [r["decay"] for r in rows]
    inv = {
        "partition_1e-10": _inv(part <= 1e-10, max_error=part),
        "identity_beyond_one_1e-10": _inv(ident <= 1e-10, max_error=ident),
        "decay_strictly_decreasing": _inv(all(b < a for a, b in zip(decay, decay[1:]))),
        "decay_below_1e-3": _inv(decay[-1] < 1e-3, last=decay[-1]),
        "eta_increasing_on_dyadics": _inv(flattening.monotone_on_dyadics(spec)),
        "eta_at_two": _inv(float(spec.eta(2.0)[0]) == 2.0),
    }
    return flattening.FLATTEN_COLUMNS, rows, inv, {"shift": spec.shift,
                                                    "derivative_order_cap": flattening.MAX_ORDER}


def _phi_star(cfg):
    spec = phi_star.PhiStarSpec(dim=cfg.n)
    rows = phi_star.region_checks(spec, int(cfg.params["samples"]), _rng(cfg))
    by = {r["check"]: r for r in rows}
    inv = {
        "below_graph_identity_1e-8": _inv(by["below_graph"]["max_error"] <= 1e-8),
        "outside_band_identity_1e-8": _inv(by["outside_band"]["max_error"] <= 1e-8),
        "graph_maps_to_zero_1e-8": _inv(by["graph_to_zero"]["max_error"] <= 1e-8),
        "vertical_speed_ge_half": _inv(by["monotone"]["min_derivative"] >= 0.5 - 1e-3,
                                       min=by["monotone"]["min_derivative"]),
    }
    return phi_star.PHI_STAR_COLUMNS, rows, inv, {}


def _pi_m(cfg):
    fam = _family(cfg, level_rule="plateau")
    d = capacity.family_domain(fam, nodes_per_bump=cfg.resolution)
    m0, m1 = cfg.m_range
    rows = capacity.pi_m_table(fam, d, range(m0, m1 + 1))
    gaps = [r["gap_w1n"] for r in rows]
    at_k = [r["gap_w1n"] for r in rows if r["m"] >= fam.kmax]
    inv = {
        "gap_non_increasing": _inv(_non_increasing(gaps)),
        "gap_zero_at_kmax": _inv(bool(at_k) and all(g == 0.0 for g in at_k)),
        "gap_within_bound": _inv(all(r["gap_w1n"] <= r["bound"] + 1e-12 for r in rows)),
        "supports_disjoint": _inv(int(capacity.bump_support_overlap(fam, d).max()) <= 1),
    }
    return capacity.PI_M_COLUMNS, rows, inv, {"grid": list(d.shape)}


_RUNNERS = {
    "composition": _composition, "capacity": _capacity, "gamma-energy": _gamma_energy,
    "whitney": _whitney, "truncate-sweep": _truncate_sweep, "wrinkle": _wrinkle,
    "packing": _packing, "flatten": _flatten, "phi-star": _phi_star, "pi-m": _pi_m,
}


def list_experiments() -> list:
    """``(name, description, anchor)`` in a fixed order."""
    return [(name, desc, anchor) for name, (desc, anchor) in CATALOGUE.items()]


def run(cfg: ExperimentConfig, write: bool = True) -> Report:
    """Run one experiment; module errors are captured in the report."""
    t0 = time.perf_counter()
    try:
        cols, rows, inv, extra = _RUNNERS[cfg.name](cfg)
        rep = Report(cfg, list(cols), rows, inv, extra)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        rep = Report(cfg, [], [], {"completed": _inv(False)}, error=f"{type(exc).__name__}: {exc}")
    rep.wall_time = time.perf_counter() - t0
    if write:
        base = os.path.join(cfg.out, cfg.name)
        lio.atomic_write(base + ".csv", rep.to_csv())
        lio.atomic_write(base + ".json", rep.to_json())
    return rep


def export_obj(kind: str, path, cfg: ExperimentConfig | None = None) -> int:
    """Write a graph surface as OBJ; returns the vertex count.

    ``kind`` is ``"gamma"`` (graph of the gridded bump sum over its layer
    box, family from ``cfg``, heights scaled by ``params["height_scale"]``) or ``"wrinkle"`` (graph of the wrinkle
    function over a window of a few teeth).
    """
    if kind == "gamma":
        cfg = cfg or ExperimentConfig("pi-m")
        fam = _family(cfg, level_rule="plateau",
                      height_scale=float(cfg.params.get("height_scale", 1.0)))
        d = capacity.family_domain(fam, nodes_per_bump=cfg.resolution)
        z = capacity.gamma_field(fam, d).values[..., 0]
        x, y = d.axis(0), d.axis(1)
    elif kind == "wrinkle":
        cfg = cfg or ExperimentConfig("wrinkle")
        spec = wrinkles.WrinkleSpec(cfg.m_range[0])
        x, y, z = wrinkles.wrinkle_surface(spec, teeth=int(cfg.params.get("teeth", 4)))
    else:
        raise ValueError(f"unknown surface {kind!r}; choose 'gamma' or 'wrinkle'")
    lio.atomic_write(path, lio.grid_surface_obj(x, y, z))
    return len(x) * len(y)
