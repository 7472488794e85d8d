"""Experiment driver.

    horofill list [--verbose]
    horofill run   --config FILE [--out DIR] [--seed N] [--jobs N] [--cap-cells N] [--cap-lp-iters N]
    horofill audit --config FILE [same flags]

Exit status: 0 when every check passes, 1 when a check fails, 2 for a bad
config or usage, 3 when a capacity cap is hit.  The output directory can be
overridden with HOROFILL_OUT (the --out flag wins over it).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import os
import random
import sys
import time
import warnings
from collections import deque
from fractions import Fraction

import yaml

from . import __version__
from .building import (XI, VerticalGeodesic, downward_link, is_characteristic,
                       opposite_witness, project_to_geodesic, slice_project)
from .chains import (Chain, barycentric_subdivide, boundary, ff_deform, mass,
                     triangulate)
from .extension import (Pipeline, audit_cover, audit_whitney, grid_space, lipschitz_g,
                        ls_cover, nerve, tree_product_space, undistorted_fill, whitney)
from .filling import (fit_exponent, growth_ratios, min_fill_lp, min_fill_oracle, cone_fill,
                      run_jobs)
from .spaces import (DEFAULT_CELL_CAP, CapacityError, apartment_loops, build_grid, build_tree,
                     build_tree_product, hard_sphere, horosphere, random_cycle)


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------ schemas

SPACE_DOC = {
    "builder": "grid | tree-product | horosphere",
    "L": "grid side (grid)",
    "dims": "grid dimension (grid)",
    "factors": "number of tree factors",
    "q": "branching (each vertex has q children)",
    "depth": "truncation depth of each tree",
    "slope": "positive integer slope per factor",
    "C0": "height offset, h = C0 - sum slope_i * level_i",
    "level": "level t of the level set (horosphere)",
    "side": "grid only, in cover-audit: Z is the face x0 = 0",
}

KINDS = {
    "fill-sweep": {
        "doc": "minimal fillings of a family of cycles, with an exponent fit",
        "randomized": ("loops", "random"),
        "experiment": {
            "loops": "grid-square | apartment | random",
            "sizes": "grid sides, or mass budgets for random loops",
            "methods": "list from lp, oracle, cone",
            "k": "cycle dimension (or list) for random loops",
            "count": "random loops per space and budget",
            "max_candidates": "skip instances with more candidate cells than this",
            "coeff_bound": "oracle coefficient bound",
        },
        "expect": {"exponent": "[lo, hi]", "r2_min": "float", "exact": "{size: 'p/q'}",
                   "methods_agree": "bool", "mass_span_min": "ratio of largest to smallest cycle mass",
                   "min_instances": "int"},
    },
    "hard-sphere": {
        "doc": "apartment cross-sections at growing apex height; fillings in X, in bands and in Z",
        "randomized": None,
        "experiment": {"radii": "list of r", "extra": "spare depth below the apartment"},
        "expect": {"fvx_exponent_max": "polynomial bound on FV_X(r)",
                   "fvz_ratio_min": "lower bound on FV_Z(r+1)/FV_Z(r)",
                   "fvz_nondecreasing": "bool", "band_obstruction": "bool"},
    },
    "pipeline": {
        "doc": "push ambient geodesics between level-set vertices back into the level set",
        "randomized": True,
        "experiment": {"depths": "list of depths", "pairs": "pairs per depth",
                       "eps": "cover scale", "a": "annulus factor"},
        "expect": {"c_stability": "max ratio between the constants of consecutive depths",
                   "c_max": "optional absolute bound"},
    },
    "cover-audit": {
        "doc": "cover invariants, nerve dimension and the Lipschitz bound for g",
        "randomized": None,
        "experiment": {"eps": "cover scale", "a": "annulus factor", "b": "shrink factor",
                       "gamma_bound": "declared scale ratio bound"},
        "expect": {"all": "bool"},
    },
    "whitney-audit": {
        "doc": "dyadic Whitney cubes of [0, L]^(k+1)",
        "randomized": None,
        "experiment": {"L": "list of box sides", "k": "list of k"},
        "expect": {"all": "bool"},
    },
}

AUDITS = {
    "chain-identities": {
        "doc": "boundary squared is zero and refinements commute with the boundary",
        "randomized": None,
        "experiment": {"refine": "spaces (by index) whose refinements are checked"},
        "expect": {"all": "bool"},
    },
    "deformation": {
        "doc": "deformation homotopy identity and the mass ratio across subdivision levels",
        "randomized": True,
        "experiment": {"count": "random cycles per complex and level", "k": "list of cycle dims",
                       "budget": "mass budget of random cycles"},
        "expect": {"ratio_growth_max": "bound on level-2 over level-1 max ratio"},
    },
    "building": {
        "doc": "characteristic chambers, opposite witnesses and geodesic projections",
        "randomized": True,
        "experiment": {"witness_depth": "depth for the exhaustive n=2 witness check",
                       "sample_depth": "depth for the sampled n=3 check",
                       "sample": "chambers sampled per base point at n=3",
                       "geodesic_depth": "depth for the projection checks",
                       "margin": "minimal margin of base points"},
        "expect": {"all": "bool"},
    },
}

TOP_KEYS = {"kind", "name", "seed", "space", "experiment", "expect", "caps", "out"}
CAP_KEYS = {"cells", "lp_iters", "time_s"}


def _schema(kind):
    return KINDS.get(kind) or AUDITS.get(kind)


def load_config(path):
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as ex:
        raise ConfigError(f"cannot read config: {ex}") from None
    except yaml.YAMLError as ex:
        raise ConfigError(f"config is not valid YAML: {ex}") from None
    return validate(cfg)


def validate(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    bad = set(cfg) - TOP_KEYS
    if bad:
        raise ConfigError(f"unknown keys: {sorted(bad)}")
    kind = cfg.get("kind")
    sch = _schema(kind)
    if sch is None:
        raise ConfigError(f"kind must be one of {sorted(KINDS) + sorted(AUDITS)}")
    exp = cfg.get("experiment") or {}
    bad = set(exp) - set(sch["experiment"])
    if bad:
        raise ConfigError(f"unknown experiment keys for {kind}: {sorted(bad)}")
    exp_k = cfg.get("expect") or {}
    bad = set(exp_k) - set(sch["expect"])
    if bad:
        raise ConfigError(f"unknown expect keys for {kind}: {sorted(bad)}")
    caps = cfg.get("caps") or {}
    bad = set(caps) - CAP_KEYS
    if bad:
        raise ConfigError(f"unknown caps: {sorted(bad)}")
    for k, v in caps.items():
        if not isinstance(v, (int, float)) or v <= 0:
            raise ConfigError(f"cap {k} must be positive")
    spaces = cfg.get("space")
    if spaces is not None:
        for s in spaces if isinstance(spaces, list) else [spaces]:
            if not isinstance(s, dict):
                raise ConfigError("space entries must be mappings")
            bad = set(s) - set(SPACE_DOC)
            if bad:
                raise ConfigError(f"unknown space keys: {sorted(bad)}")
            if s.get("builder") not in ("grid", "tree-product", "horosphere"):
                raise ConfigError("space.builder must be grid, tree-product or horosphere")
    rnd = sch["randomized"]
    if rnd is True or (isinstance(rnd, tuple) and exp.get(rnd[0]) == rnd[1]):
        if "seed" not in cfg:
            raise ConfigError(f"{kind} is randomized here: seed is mandatory")
    if "seed" in cfg and not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    return cfg


def config_hash(cfg):
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()[:16]


# ------------------------------------------------------------ helpers

class Budget:
    def __init__(self, caps):
        self.cells = int(caps.get("cells", DEFAULT_CELL_CAP))
        self.lp_iters = caps.get("lp_iters")
        self.time_s = caps.get("time_s")
        self.t0 = time.perf_counter()

    def check(self):
        if self.time_s and time.perf_counter() - self.t0 > self.time_s:
            raise CapacityError(f"time budget caps.time_s={self.time_s} exceeded")


def q(x):
    """Exact value as 'p/q' with a float companion."""
    if x is None:
        return None, None
    x = Fraction(x)
    return str(x), float(x)


def _trees(spec, depth=None, budget=None):
    n = int(spec.get("factors", 2))
    D = int(depth if depth is not None else spec.get("depth", 3))
    cap = budget.cells if budget else DEFAULT_CELL_CAP
    trees = [build_tree(int(spec.get("q", 2)), D, cap) for _ in range(n)]
    slope = tuple(spec.get("slope", [1] * n))
    return build_tree_product(trees, slope, int(spec.get("C0", D)), cap)


def build(spec, budget=None, depth=None):
    """Returns (label, target complex, tree-product space or None, level set or None)."""
    try:
        return _build(spec, budget, depth)
    except CapacityError:
        raise
    except (ValueError, KeyError) as ex:
        raise ConfigError(f"bad space {spec}: {ex}") from None


def _build(spec, budget, depth):
    b = spec["builder"]
    cap = budget.cells if budget else DEFAULT_CELL_CAP
    if b == "grid":
        cx = build_grid(int(spec["L"]), int(spec.get("dims", 2)), cap)
        return f"grid(L={spec['L']},dims={spec.get('dims', 2)})", cx, None, None
    sp = _trees(spec, depth, budget)
    label = f"trees(n={sp.n},q={spec.get('q', 2)},D={sp.factors[0].D},C0={sp.C0})"
    if b == "tree-product":
        return label, sp.complex, sp, None
    Z = horosphere(sp, Fraction(spec.get("level", 0)), triangulated=False)
    return f"Z[{label},t={Z.t}]", Z.complex, sp, Z


def _spaces(cfg):
    s = cfg.get("space")
    if s is None:
        return []
    return s if isinstance(s, list) else [s]


def _check(checks, name, ok, detail=""):
    checks[name] = {"ok": bool(ok), "detail": detail}


# ------------------------------------------------------------ fill-sweep

def _fill(method, cx, alpha, budget, space=None, Z=None, coeff_bound=2):
    if method == "lp":
        return min_fill_lp(cx, alpha, max_iters=budget.lp_iters)
    if method == "oracle":
        return min_fill_oracle(cx, alpha, coeff_bound=coeff_bound)
    if method == "cone":
        return cone_fill(space, Z, alpha)
    raise ConfigError(f"unknown method {method}")


def run_fill_sweep(cfg, budget, jobs):
    exp = cfg.get("experiment") or {}
    expect = cfg.get("expect") or {}
    methods = exp.get("methods", ["lp"])
    loops = exp.get("loops", "grid-square")
    seed = cfg.get("seed", 0)
    instances = []
    work = []
    if loops == "grid-square":
        for L in exp.get("sizes", [2, 3, 4, 5, 6]):
            cx = build_grid(int(L), 2, budget.cells)
            patch = Chain(2, {c: 1 for c in cx.cells_of_dim(2)}, cx)
            work.append((f"L{L}", (f"grid(L={L},dims=2)", cx, boundary(patch), None, None, L)))
    elif loops == "apartment":
        for spec in _spaces(cfg):
            label, cx, sp, Z = build(spec, budget)
            if Z is None:
                raise ConfigError("apartment loops need a horosphere space")
            for name, loop, _ in apartment_loops(sp, Z):
                work.append((name, (label, cx, loop, sp, Z, name)))
    elif loops == "random":
        k = exp.get("k", 1)
        ks = k if isinstance(k, list) else [k]
        count = int(exp.get("count", 10))
        maxc = exp.get("max_candidates")
        for si, spec in enumerate(_spaces(cfg)):
            label, cx, sp, Z = build(spec, budget)
            for k in ks:
                k = int(k)
                if k + 1 > cx.dim or (maxc is not None and cx.count(k + 1) > maxc):
                    continue
                for size in exp.get("sizes", [4]):
                    for c in range(count):
                        s = random.Random(f"{seed}:{si}:{k}:{size}:{c}").randrange(2 ** 31)
                        a = random_cycle(cx, k, size, s)
                        if a.is_zero():
                            continue
                        work.append((f"s{si}-k{k}-b{size}-{c}", (label, cx, a, sp, Z, size)))
    else:
        raise ConfigError(f"unknown loops kind {loops}")

    def job(payload):
        label, cx, a, sp, Z, size = payload
        budget.check()
        out = {}
        for m in methods:
            r = _fill(m, cx, a, budget, sp, Z, exp.get("coeff_bound", 2))
            out[m] = {"mass": q(r.mass)[0], "status": r.lp_status,
                      "gap": q(r.duality_gap)[0], "runtime_ms": r.runtime_ms}
        return out

    results = run_jobs(job, [(i, p) for i, (_, p) in enumerate(work)], jobs)
    for i, (iid, (label, cx, a, sp, Z, size)) in enumerate(work):
        instances.append({"id": iid, "space": label, "size": str(size),
                          "mass_in": q(mass(a))[0], "fills": results[i]})
    checks = {}
    main = methods[0]
    pts = [(Fraction(x["mass_in"]), Fraction(x["fills"][main]["mass"])) for x in instances
           if x["fills"][main]["mass"] not in (None, "0")]
    fit = None
    if len(pts) >= 2:
        fit = fit_exponent(pts)
    summary = {"instances": len(instances),
               "exponent": None if fit is None else fit.exponent,
               "r2": None if fit is None else fit.r_squared}
    if "exponent" in expect:
        lo, hi = expect["exponent"]
        _check(checks, "exponent", fit is not None and lo <= fit.exponent <= hi,
               f"{None if fit is None else round(fit.exponent, 4)} in [{lo}, {hi}]")
    if "r2_min" in expect:
        _check(checks, "r2", fit is not None and fit.r_squared >= expect["r2_min"],
               f"{None if fit is None else round(fit.r_squared, 4)} >= {expect['r2_min']}")
    if "exact" in expect:
        bad = []
        for x in instances:
            want = expect["exact"].get(int(x["size"])) if x["size"].isdigit() else None
            if want is not None and Fraction(x["fills"][main]["mass"]) != Fraction(str(want)):
                bad.append(x["id"])
        _check(checks, "exact_values", not bad, f"mismatches: {bad}")
    if expect.get("methods_agree"):
        bad = [x["id"] for x in instances
               if len({v["mass"] for v in x["fills"].values()}) != 1]
        _check(checks, "methods_agree", not bad and instances,
               f"{len(instances)} instances, mismatches: {bad}")
    if "mass_span_min" in expect:
        ms = [Fraction(x["mass_in"]) for x in instances]
        span = max(ms) / min(ms) if ms else 0
        summary["mass_span"] = q(span)[0]
        _check(checks, "mass_span", span >= Fraction(str(expect["mass_span_min"])),
               f"{span} >= {expect['mass_span_min']}")
    if "min_instances" in expect:
        _check(checks, "min_instances", len(instances) >= expect["min_instances"],
               f"{len(instances)} >= {expect['min_instances']}")
    rows = [["id", "space", "size", "mass_in", "mass_in_float", "method", "mass_fill",
             "mass_fill_float", "status"]]
    for x in instances:
        for m, v in x["fills"].items():
            rows.append([x["id"], x["space"], x["size"], x["mass_in"], q(x["mass_in"])[1], m,
                         v["mass"], q(v["mass"])[1], v["status"]])
    return instances, checks, summary, {"sweep.csv": rows}


# ------------------------------------------------------------ hard-sphere

def _sphere_space(spec, r, budget, extra):
    """Smallest depth (then smallest C0) carrying hard_sphere(r)."""
    n = int(spec.get("factors", 2))
    for D in range(max(2, r + 1), 12):
        for C0 in range(r + 1, n * D + 1):
            s = dict(spec, depth=D, C0=C0)
            try:
                sp = _trees(s, None, budget)
                Z = horosphere(sp, 0, triangulated=False)
                a, info = hard_sphere(sp, r, Z, extra)
            except CapacityError as ex:
                if "cap" in str(ex) and "depth" not in str(ex):
                    raise
                continue
            return sp, Z, a, info
    raise CapacityError(f"no depth below 12 carries hard_sphere({r})")


def run_hard_sphere(cfg, budget, jobs):
    exp = cfg.get("experiment") or {}
    expect = cfg.get("expect") or {}
    spec = _spaces(cfg)[0]
    instances = []
    for r in exp.get("radii", [1, 2, 3, 4]):
        budget.check()
        sp, Z, a, info = _sphere_space(spec, int(r), budget, int(exp.get("extra", 1)))
        ha = Z.to_host(a)
        fx = min_fill_lp(sp.complex, ha, max_iters=budget.lp_iters)
        fz = min_fill_lp(Z.complex, a, max_iters=budget.lp_iters)
        bands = []
        for w in range(0, int(r) + 2):
            keep = {i for i in range(len(sp.complex))
                    if max(abs(sp.h[v]) for v in sp.complex.vertices(i)) <= w}
            f = min_fill_lp(sp.complex, ha, restrict=keep, max_iters=budget.lp_iters)
            bands.append({"width": w, "status": f.lp_status, "mass": q(f.mass)[0]})
        first = next((b["width"] for b in bands if b["status"] == "optimal"), None)
        instances.append({"id": f"r{r}", "r": int(r), "depth": sp.factors[0].D, "C0": sp.C0,
                          "mass_alpha": q(mass(a))[0], "fv_x": q(fx.mass)[0],
                          "fv_z": q(fz.mass)[0], "fv_z_status": fz.lp_status,
                          "bands": bands, "first_fillable_band": first})
    checks = {}
    fvx = [Fraction(x["fv_x"]) for x in instances]
    rs = [x["r"] for x in instances]
    fit = fit_exponent(list(zip(rs, fvx))) if len(rs) >= 2 else None
    summary = {"fv_x_exponent_in_r": None if fit is None else fit.exponent,
               "fv_x_ratios": [str(v) for v in growth_ratios(fvx)] if fvx else []}
    if "fvx_exponent_max" in expect:
        _check(checks, "fv_x_polynomial", fit is not None and fit.exponent <= expect["fvx_exponent_max"],
               f"log-log exponent {None if fit is None else round(fit.exponent, 4)}")
    if expect.get("band_obstruction"):
        bad = [x["id"] for x in instances
               if x["first_fillable_band"] is None or x["first_fillable_band"] <= x["r"]]
        _check(checks, "band_obstruction", not bad,
               "no filling inside |h| <= r; first fillable width per r: "
               + str([x["first_fillable_band"] for x in instances]))
    if "fvz_ratio_min" in expect or expect.get("fvz_nondecreasing"):
        finite = all(x["fv_z"] is not None for x in instances)
        if not finite:
            _check(checks, "fv_z_exponential", False,
                   "FV_Z is infinite (the level set has no cells to fill with); ratios undefined")
        else:
            rat = growth_ratios([Fraction(x["fv_z"]) for x in instances])
            ok = all(v >= Fraction(str(expect.get("fvz_ratio_min", 0))) for v in rat)
            if expect.get("fvz_nondecreasing"):
                ok = ok and all(b >= a for a, b in zip(rat, rat[1:]))
            _check(checks, "fv_z_exponential", ok, f"ratios {[str(v) for v in rat]}")
    rows = [["r", "depth", "mass_alpha", "fv_x", "fv_x_float", "fv_z_status", "first_fillable_band"]]
    for x in instances:
        rows.append([x["r"], x["depth"], x["mass_alpha"], x["fv_x"], q(x["fv_x"])[1],
                     x["fv_z_status"], x["first_fillable_band"]])
    return instances, checks, summary, {"hard_sphere.csv": rows}


# ------------------------------------------------------------ pipeline

def _geodesic(space, a, b):
    """Shortest host path from vertex a to vertex b as a 1-chain."""
    cx = space.complex
    prev = {a: None}
    dq = deque([a])
    edge_to = {}
    adj = {}
    for e in cx.cells_of_dim(1):
        (y, sy), (x, sx) = cx.cells[e].boundary
        adj.setdefault(x, []).append((y, e, sy))
        adj.setdefault(y, []).append((x, e, sx))
    while dq:
        u = dq.popleft()
        if u == b:
            break
        for w, e, s in adj[u]:
            if w not in prev:
                prev[w] = u
                edge_to[w] = (e, s)
                dq.append(w)
    coefs = {}
    u = b
    while prev[u] is not None:
        e, s = edge_to[u]
        coefs[e] = coefs.get(e, 0) + s
        u = prev[u]
    return Chain(1, coefs, cx)


def run_pipeline(cfg, budget, jobs):
    exp = cfg.get("experiment") or {}
    expect = cfg.get("expect") or {}
    spec = _spaces(cfg)[0]
    seed = cfg["seed"]
    eps = Fraction(str(exp.get("eps", "3/2")))
    a_fac = int(exp.get("a", 8))
    instances = []
    per_depth = {}
    for D in exp.get("depths", [4, 5]):
        budget.check()
        s = dict(spec, depth=D, C0=spec.get("C0", D))
        sp = _trees(s, None, budget)
        Z = horosphere(sp, 0, triangulated=False)
        pl = Pipeline(sp, Z, eps=eps, a=a_fac, m=1)
        zc = Z.complex
        zv = sorted(zc.cells_of_dim(0))
        rng = random.Random(f"{seed}:{D}")
        pairs = [tuple(rng.sample(zv, 2)) for _ in range(int(exp.get("pairs", 50)))]
        zadj = Z.graph()

        def job(pair, sp=sp, Z=Z, pl=pl, zc=zc, zadj=zadj):
            u, w = pair
            alpha = Chain(0, {u: 1, w: -1}, zc)
            beta = _geodesic(sp, Z.host_cell[w], Z.host_cell[u])
            res = undistorted_fill(sp, Z, alpha, beta, pl)
            dist = {u: 0}
            dq = deque([u])
            while dq and w not in dist:
                x = dq.popleft()
                for y in zadj[x]:
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        dq.append(y)
            exact = boundary(res.filling, augment=False) == alpha
            return {"d_x": str(mass(beta)), "d_z": dist.get(w), "mass": str(res.mass),
                    "exact": exact, "trace": {k: str(v) for k, v in pl.trace[-1].items()}}

        got = run_jobs(job, list(enumerate(pairs)), jobs)
        worst = Fraction(0)
        for i, (u, w) in enumerate(pairs):
            r = got[i]
            ratio = Fraction(r["mass"]) / (Fraction(r["d_x"]) + 1)
            worst = max(worst, ratio)
            instances.append({"id": f"D{D}-{i}", "depth": D, "u": u, "w": w, **r,
                              "ratio": str(ratio)})
        per_depth[D] = {"C": str(worst), "C_float": float(worst), "cover_elements": len(pl.cover),
                        "nerve_dim": pl.nerve.dim, "cover_ok": audit_cover(pl.cover)["ok"]}
    checks = {}
    _check(checks, "exact_boundary", all(x["exact"] for x in instances),
           f"{len(instances)} fillings with boundary exactly the pair")
    Cs = [Fraction(per_depth[D]["C"]) for D in sorted(per_depth)]
    if "c_stability" in expect and len(Cs) >= 2:
        worst = max(max(a, b) / min(a, b) for a, b in zip(Cs, Cs[1:]))
        _check(checks, "c_stability", worst <= Fraction(str(expect["c_stability"])),
               f"C per depth {[str(c) for c in Cs]}, worst ratio {worst}")
    if "c_max" in expect:
        _check(checks, "c_max", max(Cs) <= Fraction(str(expect["c_max"])), f"max C {max(Cs)}")
    summary = {"per_depth": {str(k): v for k, v in per_depth.items()}}
    rows = [["id", "depth", "d_x", "d_z", "mass_fill", "mass_fill_float", "ratio", "ratio_float"]]
    for x in instances:
        rows.append([x["id"], x["depth"], x["d_x"], x["d_z"], x["mass"], q(x["mass"])[1],
                     x["ratio"], q(x["ratio"])[1]])
    return instances, checks, summary, {"pipeline.csv": rows}


# ------------------------------------------------------------ cover-audit

def run_cover_audit(cfg, budget, jobs):
    exp = cfg.get("experiment") or {}
    eps = Fraction(str(exp.get("eps", "3/2")))
    a_fac = int(exp.get("a", 8))
    b_fac = int(exp.get("b", 1))
    gb = exp.get("gamma_bound", 4)
    instances = []
    checks = {}
    rows = [["instance", "invariant", "measured", "declared", "ok"]]
    for spec in _spaces(cfg):
        budget.check()
        if spec["builder"] == "grid":
            X, cx = grid_space(int(spec["L"]), int(spec.get("dims", 2)))
            Zset = [v for v in cx.cells_of_dim(0) if cx.cells[v].coords[0] == 0]
            label = X.name + "+side"
        else:
            label, _, sp, Z = build(spec, budget)
            if Z is None:
                raise ConfigError("cover-audit needs a grid or a horosphere")
            X = tree_product_space(sp)
            Zset = sorted({Z.host_cell[v] for v in Z.complex.cells_of_dim(0)})
        cov = ls_cover(X, Zset, eps, a_fac, b_fac)
        au = audit_cover(cov, gb)
        nv = nerve(cov)
        lip, bound = lipschitz_g(cov, nv)
        rec = {"id": label, "elements": len(cov), "far": cov.kind.count("far"),
               "nerve_dim": nv.dim, "lip_g": str(lip), "lip_bound": str(bound),
               "invariants": {k: {kk: (str(vv) if isinstance(vv, Fraction) else vv)
                                  for kk, vv in v.items()}
                              for k, v in au.items() if isinstance(v, dict)}}
        instances.append(rec)
        for name, v in au.items():
            if not isinstance(v, dict):
                continue
            _check(checks, f"{label}:{name}", v["ok"], str(v.get("measured", "")))
            rows.append([label, name, str(v.get("measured", "")), str(v.get("declared", "")), v["ok"]])
        _check(checks, f"{label}:lipschitz_g", lip <= bound, f"{lip} <= {bound}")
        rows.append([label, "lipschitz_g", str(lip), str(bound), lip <= bound])
    return instances, checks, {}, {"cover.csv": rows}


# ------------------------------------------------------------ whitney-audit

def run_whitney_audit(cfg, budget, jobs):
    exp = cfg.get("experiment") or {}
    instances = []
    checks = {}
    rows = [["L", "k", "cubes", "tiling", "side", "boundary", "ratio", "note"]]
    for L in exp.get("L", [4, 8, 16]):
        for k in exp.get("k", [0, 1, 2]):
            budget.check()
            W = whitney(int(L), int(k))
            au = audit_whitney(W)
            instances.append({"id": f"L{L}k{k}", **au, "note": W["note"]})
            _check(checks, f"L{L}k{k}", au["ok"], f"{au['count']} cubes")
            rows.append([L, k, au["count"], au["tiling"], au["side"], au["boundary"],
                         au["ratio"], W["note"]])
    return instances, checks, {}, {"whitney.csv": rows}


# ------------------------------------------------------------ audits

def audit_chain_identities(cfg, budget, jobs):
    exp = cfg.get("experiment") or {}
    refine = set(exp.get("refine", []))
    instances = []
    checks = {}
    for si, spec in enumerate(_spaces(cfg)):
        budget.check()
        label, cx, sp, Z = build(spec, budget)
        bad = 0
        for i in range(len(cx)):
            if cx.cells[i].dim >= 2 and not boundary(boundary(cx.cell_chain(i))).is_zero():
                bad += 1
        rec = {"id": label, "cells": len(cx), "dd_failures": bad}
        _check(checks, f"{label}:dd", bad == 0, f"{len(cx)} cells")
        if Z is not None:
            bad_iota = 0
            for i in range(len(cx)):
                c = cx.cell_chain(i)
                if c.dim >= 1 and boundary(Z.to_host(c)) != Z.to_host(boundary(c)):
                    bad_iota += 1
            rec["to_host_failures"] = bad_iota
            _check(checks, f"{label}:to_host", bad_iota == 0, "push to host commutes with boundary")
        if si in refine:
            refs = []
            if Z is not None and Z.tri is not None:
                refs.append(("triangulate", Z.tri))
            elif all(cx.cells[v].coords is not None for v in cx.cells_of_dim(0)):
                refs.append(("triangulate", triangulate(cx)))
            base = refs[0][1].fine if refs else cx
            if all(base.is_simplex(i) for i in range(len(base))):
                refs.append(("barycentric", barycentric_subdivide(base)))
            for kind, R in refs:
                bad_r = 0
                for i in range(len(R.coarse)):
                    c = R.coarse.cell_chain(i)
                    if c.dim >= 1 and boundary(R.refine(c)) != R.refine(boundary(c)):
                        bad_r += 1
                bad_dd = sum(1 for i in range(len(R.fine)) if R.fine.cells[i].dim >= 2
                             and not boundary(boundary(R.fine.cell_chain(i))).is_zero())
                rec[f"{kind}_failures"] = bad_r + bad_dd
                _check(checks, f"{label}:{kind}", bad_r + bad_dd == 0,
                       f"{len(R.fine)} fine cells")
        instances.append(rec)
    return instances, checks, {}, {}


def audit_deformation(cfg, budget, jobs):
    exp = cfg.get("experiment") or {}
    expect = cfg.get("expect") or {}
    seed = cfg["seed"]
    count = int(exp.get("count", 200))
    ks = exp.get("k", [1])
    bud = int(exp.get("budget", 8))
    instances = []
    checks = {}
    rows = [["complex", "level", "k", "cycles", "max_ratio_p", "max_ratio_p_float", "max_ratio_q"]]
    for si, spec in enumerate(_spaces(cfg)):
        budget.check()
        label, cx, sp, Z = build(spec, budget)
        base = Z.tri.fine if Z is not None and Z.tri is not None else triangulate(cx).fine
        sd1 = barycentric_subdivide(base)
        sd2 = barycentric_subdivide(sd1.fine)
        best = {}
        for level, sd in ((1, sd1), (2, sd2)):
            for k in ks:
                fails = 0
                n = 0
                mp = mq = Fraction(0)
                for c in range(count):
                    s = random.Random(f"{seed}:{si}:{level}:{k}:{c}").randrange(2 ** 31)
                    a = random_cycle(sd.fine, int(k), bud, s)
                    if a.is_zero():
                        continue
                    n += 1
                    d = ff_deform(a)
                    lhs = boundary(d.q_chain)
                    rhs = a - sd.refine(d.p_chain)
                    if lhs != rhs:
                        fails += 1
                    mp = max(mp, d.mass_ratio_p)
                    mq = max(mq, d.mass_ratio_q)
                best[(level, k)] = mp
                instances.append({"id": f"{label}:L{level}:k{k}", "cycles": n,
                                  "identity_failures": fails, "max_ratio_p": str(mp),
                                  "max_ratio_q": str(mq)})
                _check(checks, f"{label}:L{level}:k{k}:identity", fails == 0 and n > 0,
                       f"{n} cycles")
                rows.append([label, level, k, n, str(mp), float(mp), str(mq)])
        lim = Fraction(str(expect.get("ratio_growth_max", 2)))
        for k in ks:
            r1, r2 = best[(1, k)], best[(2, k)]
            _check(checks, f"{label}:k{k}:scale", r1 > 0 and r2 <= lim * r1,
                   f"level 2 max {r2} vs level 1 max {r1}")
    return instances, checks, {}, {"deformation.csv": rows}


def audit_building(cfg, budget, jobs):
    exp = cfg.get("experiment") or {}
    seed = cfg["seed"]
    margin = int(exp.get("margin", 2))
    checks = {}
    instances = []
    # characteristic chambers against downward-link membership, n=2 exhaustive
    D2 = int(exp.get("witness_depth", 4))
    sp = _trees({"factors": 2, "q": 2, "slope": [1, 1]}, D2, budget)
    bad = 0
    n_checked = 0
    ends = [list(t.leaves) + [XI] for t in sp.factors]
    for v in sp.complex.cells_of_dim(0):
        x = sp.keys[v]
        link = downward_link(sp, x) if sp.h_of(x) >= 0 else None
        if link is None:
            continue
        for c in itertools.product(*ends):
            n_checked += 1
            if is_characteristic(sp, x, c) != (c in link):
                bad += 1
    _check(checks, "characteristic_iff_link", bad == 0, f"{n_checked} pairs")
    instances.append({"id": "characteristic", "pairs": n_checked, "failures": bad})
    # opposite witnesses
    for n, D, sample in ((2, D2, None), (3, int(exp.get("sample_depth", 4)), int(exp.get("sample", 1000)))):
        budget.check()
        spn = sp if n == 2 else _trees({"factors": 3, "q": 2, "slope": [1, 1, 1]}, D, budget)
        base = [spn.keys[v] for v in spn.complex.cells_of_dim(0)
                if spn.vertex_margin(spn.keys[v]) >= margin]
        fails = 0
        checked = 0
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            for j, x in enumerate(base):
                w = opposite_witness(spn, x, sample=sample, seed=f"{seed}:{j}")
                fails += len(w["failures"])
                checked += w["checked"]
        _check(checks, f"opposite_witness_n{n}", fails == 0 and checked > 0,
               f"{len(base)} base points, {checked} chambers")
        instances.append({"id": f"witness_n{n}", "base_points": len(base), "chambers": checked,
                          "failures": fails, "below_level_warnings": len(caught)})
    # projections to vertical geodesics
    Dg = int(exp.get("geodesic_depth", 4))
    t = build_tree(2, Dg)
    bad_lip = bad_dist = 0
    for leaf in t.leaves:
        g = VerticalGeodesic(t, leaf)
        p = {v: project_to_geodesic(g, v) for v in range(len(t))}
        for u in range(len(t)):
            dg = min(t.dist(u, w) for w in g.vertices)
            if t.dist(u, p[u]) > 2 * dg:
                bad_dist += 1
            for w in range(u + 1, len(t)):
                if t.dist(p[u], p[w]) > t.dist(u, w):
                    bad_lip += 1
    _check(checks, "projection_decreasing", bad_lip == 0, f"{len(t.leaves)} geodesics")
    _check(checks, "projection_displacement", bad_dist == 0, "d(x, p x) <= 2 d(x, geodesic)")
    spg = _trees({"factors": 2, "q": 2, "slope": [1, 1]}, Dg, budget)
    bad_slice = 0
    cx = spg.complex
    for i in range(2):
        g = VerticalGeodesic(spg.factors[i], spg.factors[i].leaves[0], i)
        for e in cx.cells_of_dim(1):
            a, b = [spg.keys[j] for j, _ in cx.cells[e].boundary]
            if spg.dist(slice_project(spg, i, g, a), slice_project(spg, i, g, b)) > 1:
                bad_slice += 1
    _check(checks, "slice_projection_lipschitz", bad_slice == 0, "every edge of the product")
    instances.append({"id": "projections", "tree_pairs_failures": bad_lip,
                      "displacement_failures": bad_dist, "slice_failures": bad_slice})
    return instances, checks, {}, {}


RUNNERS = {
    "fill-sweep": run_fill_sweep,
    "hard-sphere": run_hard_sphere,
    "pipeline": run_pipeline,
    "cover-audit": run_cover_audit,
    "whitney-audit": run_whitney_audit,
    "chain-identities": audit_chain_identities,
    "deformation": audit_deformation,
    "building": audit_building,
}


# ------------------------------------------------------------ driver

def execute(cfg, out_dir=None, jobs=1):
    """Run a validated config; returns the run record (also written to disk
    when out_dir is given)."""
    budget = Budget(cfg.get("caps") or {})
    t0 = time.perf_counter()
    instances, checks, summary, tables = RUNNERS[cfg["kind"]](cfg, budget, jobs)
    record = {"config_hash": config_hash(cfg), "version": __version__, "kind": cfg["kind"],
              "name": cfg.get("name", cfg["kind"]), "seed": cfg.get("seed"),
              "summary": summary, "instances": instances, "checks": checks,
              "passed": all(c["ok"] for c in checks.values()),
              "wall_clock_s": round(time.perf_counter() - t0, 3)}
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "results.json"), "w") as fh:
            json.dump(record, fh, indent=1, default=str)
        for name, rows in tables.items():
            with open(os.path.join(out_dir, name), "w", newline="") as fh:
                csv.writer(fh).writerows(rows)
    return record


def strip_runtime(record):
    """Copy of a record without wall-clock fields, for reproducibility checks."""
    if isinstance(record, dict):
        return {k: strip_runtime(v) for k, v in record.items()
                if k not in ("runtime_ms", "wall_clock_s")}
    if isinstance(record, list):
        return [strip_runtime(v) for v in record]
    return record


def _list(verbose):
    lines = ["experiments (horofill run):"]
    for k, v in KINDS.items():
        lines.append(f"  {k:14s} {v['doc']}")
        if verbose:
            for kk, d in v["experiment"].items():
                lines.append(f"      experiment.{kk}: {d}")
            for kk, d in v["expect"].items():
                lines.append(f"      expect.{kk}: {d}")
    lines.append("audits (horofill audit): " + ", ".join(AUDITS))
    if verbose:
        for k, v in AUDITS.items():
            lines.append(f"  {k:16s} {v['doc']}")
            for kk, d in v["experiment"].items():
                lines.append(f"      experiment.{kk}: {d}")
        lines.append("space keys:")
        for k, d in SPACE_DOC.items():
            lines.append(f"      space.{k}: {d}")
        lines.append("caps: cells, lp_iters, time_s (all positive)")
    return "\n".join(lines)


def _parser():
    p = argparse.ArgumentParser(prog="horofill", description="filling experiments on tree products")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True)
    ls = sub.add_parser("list", help="list experiment kinds")
    ls.add_argument("--verbose", "-v", action="store_true")
    for name in ("run", "audit"):
        r = sub.add_parser(name, help=f"{name} a config")
        r.add_argument("--config", required=True)
        r.add_argument("--out")
        r.add_argument("--seed", type=int)
        r.add_argument("--jobs", type=int, default=1)
        r.add_argument("--cap-cells", type=int)
        r.add_argument("--cap-lp-iters", type=int)
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.cmd == "list":
        print(_list(args.verbose))
        return 0
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        caps = dict(cfg.get("caps") or {})
        for flag, key in ((args.cap_cells, "cells"), (args.cap_lp_iters, "lp_iters")):
            if flag is not None:
                if flag <= 0:
                    raise ConfigError(f"--cap-{key.replace('_', '-')} must be positive")
                caps[key] = flag
        if caps:
            cfg["caps"] = caps
        if args.jobs < 1:
            raise ConfigError("--jobs must be positive")
        is_audit = cfg["kind"] in AUDITS
        if is_audit != (args.cmd == "audit"):
            raise ConfigError(f"{cfg['kind']} is {'an audit' if is_audit else 'an experiment'}; "
                              f"use 'horofill {'audit' if is_audit else 'run'}'")
        out = args.out or os.environ.get("HOROFILL_OUT") or cfg.get("out") \
            or os.path.join("runs", cfg.get("name", cfg["kind"]))
        rec = execute(cfg, out, args.jobs)
    except ConfigError as ex:
        print(f"config error: {ex}", file=sys.stderr)
        return 2
    except CapacityError as ex:
        print(f"capacity exceeded: {ex}", file=sys.stderr)
        return 3
    for name, c in rec["checks"].items():
        print(f"{'PASS' if c['ok'] else 'FAIL'} {name}: {c['detail']}")
    print(f"{'passed' if rec['passed'] else 'FAILED'} -> {out}")
    return 0 if rec["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
