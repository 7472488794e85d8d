"""Filling volumes: exact-checked LP, integer oracle, cone fillings, fits."""
from __future__ import annotations

import time
from math import gcd
from collections import deque
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csc_matrix, hstack

from .chains import Chain, ChainError, boundary, is_cycle, mass
from .spaces import CapacityError


class RangeError(ChainError):
    pass


class FillingResult:
    __slots__ = ("filling", "method", "mass", "lp_status", "duality_gap", "runtime_ms", "note")

    def __init__(self, filling, method, mass, lp_status="optimal", duality_gap=Fraction(0),
                 runtime_ms=0, note=""):
        self.filling = filling
        self.method = method
        self.mass = mass
        self.lp_status = lp_status
        self.duality_gap = duality_gap
        self.runtime_ms = runtime_ms
        self.note = note

    def record(self, cycle_id):
        return {"cycle_id": cycle_id, "method": self.method,
                "mass": None if self.mass is None else str(self.mass),
                "status": self.lp_status, "runtime_ms": self.runtime_ms}

    def __repr__(self):
        return f"FillingResult({self.method}, mass={self.mass}, status={self.lp_status})"


class ExponentFit:
    __slots__ = ("points", "exponent", "r_squared", "window", "excluded")

    def __init__(self, points, exponent, r_squared, window="", excluded=()):
        self.points = points
        self.exponent = exponent
        self.r_squared = r_squared
        self.window = window
        self.excluded = list(excluded)

    def __repr__(self):
        return f"ExponentFit(exponent={self.exponent:.4f}, r2={self.r_squared:.4f}, n={len(self.points)})"


# ------------------------------------------------------------ exact algebra

def rref(columns, rhs):
    """Row-reduce the sparse system sum_j x_j columns[j] = rhs over Fractions.

    columns: {col: {row: value}}, rhs: {row: value}.  Returns
    (pivots {col: (rhs value, {free col: coef})}, free columns, consistent)."""
    rows = {}
    for j, col in columns.items():
        for r, v in col.items():
            rows.setdefault(r, {})[j] = Fraction(v)
    for r in rhs:
        rows.setdefault(r, {})
    order = sorted(columns)
    rank = {j: n for n, j in enumerate(order)}
    piv = {}          # col -> (coeffs dict incl. pivot=1, rhs)
    consistent = True
    for r in sorted(rows, key=lambda r: (len(rows[r]), r)):
        eq = dict(rows[r])
        b = Fraction(rhs.get(r, 0))
        while True:
            hit = [j for j in eq if j in piv]
            if not hit:
                break
            for j in hit:
                f = eq.get(j)
                if not f:
                    continue
                pc, pb = piv[j]
                for k, v in pc.items():
                    w = eq.get(k, 0) - f * v
                    if w:
                        eq[k] = w
                    else:
                        eq.pop(k, None)
                b -= f * pb
        if not eq:
            if b != 0:
                consistent = False
            continue
        p = min(eq, key=rank.__getitem__)
        f = eq[p]
        eq = {k: v / f for k, v in eq.items()}
        b = b / f
        # keep earlier pivot rows reduced with respect to the new pivot
        for j, (pc, pb) in piv.items():
            g = pc.get(p)
            if g:
                for k, v in eq.items():
                    w = pc.get(k, 0) - g * v
                    if w:
                        pc[k] = w
                    else:
                        pc.pop(k, None)
                piv[j] = (pc, pb - g * b)
        piv[p] = (eq, b)
    out = {}
    for j, (pc, pb) in piv.items():
        out[j] = (pb, {k: v for k, v in pc.items() if k != j})
    free = [j for j in order if j not in piv]
    return out, free, consistent


def _solve_exact(columns, rhs):
    piv, free, ok = rref(columns, rhs)
    if not ok:
        return None
    return {j: b for j, (b, _) in piv.items() if b}


def _candidates(cx, k, restrict):
    cols = cx.cells_of_dim(k + 1)
    if restrict is not None:
        rs = restrict if isinstance(restrict, (set, frozenset)) else set(restrict)
        cols = [c for c in cols if c in rs]
    return list(cols)


def _check_cycle(alpha):
    if alpha.dim == 0:
        if sum(alpha.coefs.values(), Fraction(0)) != 0:
            raise ChainError("0-chain with nonzero augmentation is not a cycle")
    elif not is_cycle(alpha):
        raise ChainError("input is not a cycle")


def _columns(cx, cols):
    return {j: {r: s for r, s in cx.cells[j].boundary} for j in cols}


def min_fill_lp(cx, alpha: Chain, restrict=None, max_iters=None, tie_break=True):
    """Minimal-mass real filling via the split LP, then exact cleanup."""
    t0 = time.perf_counter()
    _check_cycle(alpha)
    k = alpha.dim
    if alpha.is_zero():
        return FillingResult(Chain(k + 1, {}, cx), "lp", Fraction(0), "optimal", Fraction(0), 0)
    if restrict is not None:
        rs = set(restrict)
        if any(cx.cells[i].dim == k for i in rs) and not set(alpha.coefs) <= rs:
            raise ChainError("restriction does not contain the support of the cycle")
    cols = _candidates(cx, k, restrict)
    colmap = _columns(cx, cols)
    rows = sorted(set(alpha.coefs) | {r for c in colmap.values() for r in c})
    ms = lambda: int((time.perf_counter() - t0) * 1000)
    if not cols or not set(alpha.coefs) <= set(rows):
        return FillingResult(None, "lp", None, "infeasible", None, ms(),
                             "cycle is not a boundary here (homology obstruction)")
    ridx = {r: i for i, r in enumerate(rows)}
    m, n = len(rows), len(cols)
    data, ri, ci = [], [], []
    for j, c in enumerate(cols):
        for r, s in colmap[c].items():
            ri.append(ridx[r]); ci.append(j); data.append(float(s))
    A = csc_matrix((data, (ri, ci)), shape=(m, n))
    Aeq = hstack([A, -A]).tocsc()
    b = np.zeros(m)
    for r, v in alpha.coefs.items():
        b[ridx[r]] = float(v)
    w = np.array([float(cx.cells[c].weight) for c in cols])
    cost = np.concatenate([w, w])
    opts = {}
    if max_iters:
        opts["maxiter"] = int(max_iters)
    res = linprog(cost, A_eq=Aeq, b_eq=b, bounds=(0, None), method="highs", options=opts)
    if res.status == 2:
        return FillingResult(None, "lp", None, "infeasible", None, ms(),
                             "cycle is not a boundary here (homology obstruction)")
    if res.status == 1:
        return FillingResult(None, "lp", None, "capped", None, ms(), "iteration cap reached")
    if res.status != 0:
        return FillingResult(None, "lp", None, "error", None, ms(), res.message)
    x = res.x[:n] - res.x[n:]
    duals = res.eqlin.marginals
    if tie_break:
        opt = float(res.fun)
        sec = np.concatenate([np.arange(1, n + 1), np.arange(1, n + 1)]) * 1.0
        res2 = linprog(sec, A_eq=Aeq, b_eq=b, A_ub=cost[None, :], b_ub=[opt * (1 + 1e-9) + 1e-9],
                       bounds=(0, None), method="highs", options=opts)
        if res2.status == 0:
            x = res2.x[:n] - res2.x[n:]
    support = [cols[j] for j in range(n) if abs(x[j]) > 1e-9]
    sol = _solve_exact({c: colmap[c] for c in support}, alpha.coefs)
    beta = None if sol is None else Chain(k + 1, sol, cx)
    if beta is None or float(mass(beta)) > float(res.fun) * (1 + 1e-7) + 1e-7:
        # degenerate support: round the float solution instead
        sol = {cols[j]: Fraction(x[j]).limit_denominator(10 ** 6) for j in range(n) if abs(x[j]) > 1e-9}
        beta = Chain(k + 1, sol, cx)
    if boundary(beta) != alpha:
        raise ChainError("exact recheck failed: boundary of the LP filling differs from the cycle")
    val = mass(beta)
    gap = _dual_gap(cx, cols, colmap, rows, duals, alpha, val)
    return FillingResult(beta, "lp", val, "optimal", gap, ms())


def _dual_gap(cx, cols, colmap, rows, duals, alpha, val):
    """Rationalize the LP duals, scale them into exact feasibility and
    return mass - <alpha, y>, an exact upper bound on the optimality gap."""
    y = {r: Fraction(float(d)).limit_denominator(10 ** 4) for r, d in zip(rows, duals)}
    worst = Fraction(1)
    for c in cols:
        s = sum((v * y.get(r, 0) for r, v in colmap[c].items()), Fraction(0))
        ratio = abs(s) / cx.cells[c].weight
        if ratio > worst:
            worst = ratio
    lower = sum((v * y.get(r, 0) for r, v in alpha.coefs.items()), Fraction(0)) / worst
    return val - lower


def _lcm_den(vals):
    d = 1
    for v in vals:
        d = d * v.denominator // gcd(d, v.denominator)
    return d


def _oracle_search(piv, free, wt, B, chunk=1 << 16):
    """Enumerate free values in [-B, B]; pivots follow.  Integer arithmetic
    on scaled rows keeps everything exact."""
    pcols = sorted(piv)
    f = len(free)
    fidx = {c: i for i, c in enumerate(free)}
    # row p: x_p = b_p - sum a_pf x_f ; scale by D_p to integers
    scale = [_lcm_den([piv[p][0]] + list(piv[p][1].values())) for p in pcols]
    M = np.zeros((len(pcols), f), dtype=np.int64)
    rhs = np.zeros(len(pcols), dtype=np.int64)
    for i, p in enumerate(pcols):
        b, row = piv[p]
        rhs[i] = int(b * scale[i])
        for c, a in row.items():
            M[i, fidx[c]] = int(a * scale[i])
    sc = np.array(scale, dtype=np.int64)
    wden = _lcm_den(wt.values())
    wf = np.array([int(wt[c] * wden) for c in free], dtype=np.int64)
    wp = np.array([int(wt[c] * wden) for c in pcols], dtype=np.int64)
    total = (2 * B + 1) ** f
    best, best_x = None, None
    radix = (2 * B + 1) ** np.arange(f, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        X = (idx[:, None] // radix[None, :]) % (2 * B + 1) - B if f else np.zeros((len(idx), 0), np.int64)
        num = rhs[None, :] - X @ M.T
        ok = np.all(num % sc[None, :] == 0, axis=1)
        P = num // sc[None, :]
        ok &= np.all(np.abs(P) <= B, axis=1)
        if not ok.any():
            continue
        cost = np.abs(X) @ wf + np.abs(P) @ wp
        cost = np.where(ok, cost, np.iinfo(np.int64).max)
        j = int(np.argmin(cost))
        if ok[j] and (best is None or cost[j] < best):
            best = int(cost[j])
            best_x = {**{c: Fraction(int(P[j, i])) for i, c in enumerate(pcols)},
                      **{c: Fraction(int(X[j, i])) for i, c in enumerate(free)}}
    if best is None:
        return None, None
    return Fraction(best, wden), {c: v for c, v in best_x.items() if v}


def min_fill_oracle(cx, alpha: Chain, restrict=None, coeff_bound=2, cap=5 ** 10):
    """Minimum over integer fillings with |coefficient| <= coeff_bound."""
    t0 = time.perf_counter()
    _check_cycle(alpha)
    k = alpha.dim
    if alpha.is_zero():
        return FillingResult(Chain(k + 1, {}, cx), "oracle", Fraction(0), "optimal", Fraction(0), 0)
    cols = _candidates(cx, k, restrict)
    colmap = _columns(cx, cols)
    piv, free, ok = rref(colmap, alpha.coefs)
    ms = lambda: int((time.perf_counter() - t0) * 1000)
    if not ok:
        return FillingResult(None, "oracle", None, "infeasible", None, ms())
    B = int(coeff_bound)
    if (2 * B + 1) ** len(free) > cap:
        raise CapacityError(f"oracle search space {(2 * B + 1)}^{len(free)} exceeds cap {cap}")
    best, best_x = _oracle_search(piv, free, {c: cx.cells[c].weight for c in cols}, B)
    if best is None:
        return FillingResult(None, "oracle", None, "infeasible", None, ms(),
                             "no integer filling within the coefficient bound")
    beta = Chain(k + 1, best_x, cx)
    return FillingResult(beta, "oracle", mass(beta), "optimal", Fraction(0), ms())


# ------------------------------------------------------------ cone filling

def _host_vertices_of(Z, zi):
    """Host vertex tuples spanned by Z cell zi."""
    sp = Z.space
    hc = Z.host_cell[zi]
    return [sp.keys[v] for v in sp.complex.vertices(hc)]


def sector_cells(Z, x):
    """Z cells all of whose host vertices lie below x (factorwise)."""
    sp = Z.space
    trees = sp.factors
    host = sp.complex
    out = set()
    ok_vertex = {}
    for i in range(len(Z.complex)):
        good = True
        for v in host.vertices(Z.host_cell[i]):
            g = ok_vertex.get(v)
            if g is None:
                g = all(t.is_below(a, b) for t, a, b in zip(trees, sp.keys[v], x))
                ok_vertex[v] = g
            if not g:
                good = False
                break
        if good:
            out.add(i)
    return out


def apex_for(Z, chain):
    """Minimal ancestor tuple whose sector holds the support of `chain`."""
    sp = Z.space
    zc = Z.complex
    verts = set()
    for i in chain.coefs:
        verts |= zc.vertices(i)
    x = []
    for f, t in enumerate(sp.factors):
        m = None
        for z in verts:
            for tup in _host_vertices_of(Z, z):
                m = tup[f] if m is None else t.meet(m, tup[f])
        x.append(m)
    return tuple(x)


def _bfs_tree(adj, root, allowed):
    prev = {root: None}
    dq = deque([root])
    while dq:
        u = dq.popleft()
        for w in sorted(adj[u]):
            if w in allowed and w not in prev:
                prev[w] = u
                dq.append(w)
    return prev


def _edge_lookup(zc):
    e = {}
    for i in zc.cells_of_dim(1):
        (b, sb), (a, sa) = zc.cells[i].boundary
        if sb < 0:
            a, b = b, a
        e[(a, b)] = (i, 1)
        e[(b, a)] = (i, -1)
    return e


def _path_chain(zc, prev, edges, target):
    coefs = {}
    u = target
    while prev[u] is not None:
        p = prev[u]
        e, s = edges[(p, u)]
        coefs[e] = coefs.get(e, 0) + s
        u = p
    return Chain(1, coefs, zc)


def cone_fill(space, Z, alpha: Chain, local_radius=2):
    """Constructive filling inside Z by geodesic coning from a point of the
    sector below an apex x, with local exact fillings of the thin cells."""
    t0 = time.perf_counter()
    k = alpha.dim
    if space.n < k + 2:
        raise RangeError(f"cone filling of {k}-cycles needs at least {k + 2} factors")
    if k > 1:
        raise RangeError("cone filling is implemented for 0- and 1-cycles")
    _check_cycle(alpha)
    zc = Z.complex
    if alpha.is_zero():
        return FillingResult(Chain(k + 1, {}, zc), "cone", Fraction(0), "optimal", Fraction(0), 0)
    x = apex_for(Z, alpha)
    cells = sector_cells(Z, x)
    adj = Z.graph()
    verts = {v for v in cells if zc.cells[v].dim == 0}
    # cone point: the diagonal ray end from x if it lands on a vertex, else
    # the lowest-index support vertex
    from .building import ray_to_horosphere, downward_link
    start = None
    try:
        link = downward_link(space, x)
        if not link.empty and space.h_of(x) >= Z.t:
            c0 = next(link.chambers())
            end = ray_to_horosphere(space, x, c0, Z.t)
            if end.remainder == 0:
                start = Z.vertex_of(end.vertex)
    except (CapacityError, KeyError):
        start = None
    supp_v = sorted(set().union(*(zc.vertices(i) for i in alpha.coefs)))
    if start is None or start not in verts:
        start = supp_v[0]
    prev = _bfs_tree(adj, start, verts)
    edges = _edge_lookup(zc)
    if k == 0:
        out = Chain(1, {}, zc)
        for v, a in alpha.coefs.items():
            out = out + a * _path_chain(zc, prev, edges, v)
    else:
        out = Chain(2, {}, zc)
        for e, a in sorted(alpha.coefs.items()):
            (hb, sb), (ta, sa) = zc.cells[e].boundary
            if sb < 0:
                ta, hb = hb, ta
            loop = _path_chain(zc, prev, edges, ta) + zc.cell_chain(e) - _path_chain(zc, prev, edges, hb)
            if loop.is_zero():
                continue
            piece = _local_fill(Z, loop, cells, local_radius)
            out = out + a * piece
    if boundary(out) != alpha:
        raise ChainError("cone filling is not exact")
    return FillingResult(out, "cone", mass(out), "optimal", None,
                         int((time.perf_counter() - t0) * 1000))


def _local_fill(Z, loop, cells, radius):
    zc = Z.complex
    adj = Z.graph()
    seed_v = set().union(*(zc.vertices(i) for i in loop.coefs))
    r = radius
    while True:
        near = set(seed_v)
        frontier = set(seed_v)
        for _ in range(r):
            frontier = {w for u in frontier for w in adj[u] if w in cells} - near
            near |= frontier
        allowed = {c for c in cells if zc.vertices(c) <= near}
        res = min_fill_lp(zc, loop, allowed, tie_break=False)
        if res.lp_status == "optimal":
            return res.filling
        if allowed >= cells:
            raise ChainError("loop has no filling inside the sector")
        r *= 2


# ------------------------------------------------------------ fits

def fit_exponent(points, window=""):
    pts = sorted((Fraction(a), Fraction(b)) for a, b in points)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    xs = np.log([float(a) for a, _ in pts])
    ys = np.log([float(b) for _, b in pts])
    slope, icpt = np.polyfit(xs, ys, 1)
    pred = slope * xs + icpt
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1 - ss_res / ss_tot)
    return ExponentFit(pts, float(slope), r2, window)


def sweep_and_fit(generator, filler, sizes, window=""):
    """generator(size) -> (complex, cycle, restrict); filler(complex, cycle,
    restrict) -> FillingResult.  Fits log filling mass against log cycle mass."""
    sizes = list(sizes)
    if len(sizes) < 4:
        raise ValueError("sweep needs at least 4 sizes")
    points, excluded = [], []
    for s in sizes:
        cx, a, rs = generator(s)
        r = filler(cx, a, rs)
        if r.mass is None or r.mass == 0:
            excluded.append((s, r.lp_status))
            continue
        points.append((mass(a), r.mass))
    fit = fit_exponent(points, window or f"sizes={sizes}")
    fit.excluded = excluded
    return fit


def growth_ratios(values):
    v = [Fraction(x) for x in values]
    return [b / a for a, b in zip(v, v[1:])]


# ------------------------------------------------------------ work queue

_JOB = None


def _run_one(item):
    return item[0], _JOB(item[1])


def run_jobs(fn, items, jobs=1):
    """Apply fn to (instance id, payload) pairs and return {id: result}.

    With jobs > 1 a forked pool takes instances from a shared queue; the
    complexes captured by fn are inherited read-only.  Results are merged by
    instance id, so the output does not depend on scheduling."""
    global _JOB
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return {i: fn(p) for i, p in items}
    import multiprocessing as mp
    _JOB = fn
    try:
        with mp.get_context("fork").Pool(jobs) as pool:
            got = pool.map(_run_one, items, chunksize=1)
    finally:
        _JOB = None
    return dict(sorted(got))
