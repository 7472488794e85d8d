"""Covers relative to a subspace, their nerves, the maps into and out of the
nerve, Whitney cubes, the exploded simplex and the assembled filling
pipeline that pushes an ambient filling back into the level set."""
from __future__ import annotations

import csv
import io
import itertools
import math
from collections import deque
from fractions import Fraction

from .chains import (Cell, CellComplex, Chain, ChainError, _sort_sign,
                     barycentric_subdivide, boundary, ff_deform, mass)
from .spaces import CapacityError, build_grid
from .filling import FillingResult, RangeError, cone_fill


# ------------------------------------------------------------ graph spaces

class GraphSpace:
    """Vertex set of a complex with its graph metric and an Assouad-Nagata
    style cover builder.  `an_mult` is the declared point multiplicity of
    the covers and `an_diam` the declared diameter constant (diam <= an_diam*s)."""

    def __init__(self, vertices, adj, cover_fn, an_mult, an_diam, name="", metric=None):
        self.vertices = list(vertices)
        self.metric = metric
        self.adj = adj
        self.cover_fn = cover_fn
        self.an_mult = an_mult
        self.an_diam = an_diam
        self.name = name

    @property
    def an_dim(self):
        return self.an_mult - 1

    def cover(self, s):
        return self.cover_fn(s)

    def bfs(self, sources, limit=None, allowed=None):
        dist = {v: 0 for v in sources}
        dq = deque(dist)
        while dq:
            u = dq.popleft()
            du = dist[u]
            if limit is not None and du + 1 > limit:
                continue
            for w in self.adj[u]:
                if w not in dist and (allowed is None or w in allowed):
                    dist[w] = du + 1
                    dq.append(w)
        return dist

    def components(self, subset):
        subset = set(subset)
        out = []
        seen = set()
        for v in sorted(subset):
            if v in seen:
                continue
            comp = set(self.bfs([v], allowed=subset))
            seen |= comp
            out.append(comp)
        return out

    def dist(self, u, w):
        if self.metric is not None:
            return self.metric(u, w)
        return self.bfs([u])[w]

    def diameter(self, S):
        S = list(S)
        if len(S) <= 1:
            return 0
        best = 0
        Sset = set(S)
        for v in S:
            d = self.bfs([v])
            best = max(best, max(d[w] for w in Sset))
        return best


def _adjacency(cx):
    adj = {v: [] for v in cx.cells_of_dim(0)}
    for e in cx.cells_of_dim(1):
        a, b = [j for j, _ in cx.cells[e].boundary]
        adj[a].append(b)
        adj[b].append(a)
    return adj


def an_cover_grid(L, dims, s, cx=None):
    """Half-open cubes [ms, (m+1)s) of side s, as sets of grid vertices.  A
    ball of radius below s/2 meets at most 2^dims of them."""
    cx = cx or build_grid(L, dims)
    s = max(1, int(s))
    buckets = {}
    for v in cx.cells_of_dim(0):
        key = tuple(int(x) // s for x in cx.cells[v].coords)
        buckets.setdefault(key, set()).add(v)
    return [buckets[k] for k in sorted(buckets)]


def grid_space(L, dims):
    cx = build_grid(L, dims)
    return GraphSpace(cx.cells_of_dim(0), _adjacency(cx),
                      lambda s: an_cover_grid(L, dims, s, cx), 2 ** dims, dims,
                      f"grid(L={L},dims={dims})"), cx


def an_cover_tree(tree, s):
    """Bands: for every u at level divisible by 2s, u with its descendants
    down to 2s levels below it."""
    s = max(1, int(s))
    out = []
    for u in range(len(tree)):
        if tree.level[u] % (2 * s):
            continue
        top = tree.level[u]
        pre = tree.words[u]
        band = {v for v in range(len(tree)) if tree.words[v].startswith(pre)
                and tree.level[v] <= top + 2 * s}
        out.append(band)
    return out


def tree_product_space(space):
    cx = space.complex
    trees = space.factors

    def cover(s):
        per = [an_cover_tree(t, s) for t in trees]
        out = []
        for combo in itertools.product(*per):
            out.append({space.vertex_index[k] for k in itertools.product(*[sorted(b) for b in combo])})
        return out

    keys = space.keys
    return GraphSpace(cx.cells_of_dim(0), _adjacency(cx), cover, 2 ** space.n,
                      4 * space.n, f"trees(n={space.n})",
                      metric=lambda u, w: space.dist(keys[u], keys[w]))


def cover_multiplicity(sets):
    count = {}
    for S in sets:
        for v in S:
            count[v] = count.get(v, 0) + 1
    return max(count.values()) if count else 0


# ------------------------------------------------------------ relative cover

class LSCover:
    def __init__(self, X, Z, eps, a, b):
        self.X = X
        self.Z = set(Z)
        self.eps = Fraction(eps)
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.delta = self.b / (2 * (self.b + 1))
        self.rho = self.eps * self.delta * (1 + self.a)
        self.elements = []
        self.kind = []
        self.r = []
        self.dist_to_Z = []
        self.support = []
        self.tau = []           # per element: {vertex: tau_k(vertex)}
        self.warnings = []

    def __len__(self):
        return len(self.elements)

    def tau_at(self, x):
        return {k: t for k, t in self.point_tau.get(x, {}).items()}

    def annex(self):
        return [{"k": k, "elements": sorted(int(v) for v in D), "r": str(self.r[k]),
                 "kind": self.kind[k]} for k, D in enumerate(self.elements)]


def ls_cover(X: GraphSpace, Z, eps, a=8, b=1):
    """Cover of X by far elements (dyadic annuli around Z, each cut by the
    AN cover at a matching scale) and near elements (scale eps cover of the
    rho-neighbourhood of Z), with the partition functions tau_k."""
    Z = set(Z)
    if not Z:
        raise ValueError("Z must be non-empty")
    cov = LSCover(X, Z, eps, a, b)
    dZ = X.bfs(Z)
    allv = set(X.vertices)
    if len(dZ) < len(allv):
        cov.warnings.append("X is disconnected from Z; unreachable vertices form their own near elements")
        for v in allv - set(dZ):
            dZ[v] = math.inf
    rho = cov.rho
    K = X.an_diam
    near = {v for v in allv if dZ[v] <= rho}
    pieces = []
    for B in X.cover(int(cov.eps)):
        part = B & near
        if part:
            for comp in X.components(part):
                pieces.append(("near", comp))
    far = allv - near
    j = 0
    while far:
        lo, hi = rho * 2 ** j, rho * 2 ** (j + 1)
        ann = {v for v in far if lo < dZ[v] <= hi or (dZ[v] == math.inf and j == 0)}
        if ann:
            s = max(1, int(cov.a * lo / K))
            for B in X.cover(s):
                part = B & ann
                if part:
                    for comp in X.components(part):
                        pieces.append(("far", comp))
            far -= ann
        j += 1
        if j > 64:
            raise CapacityError("annulus construction did not terminate")
    # drop exact duplicates, keep order
    seen = set()
    for kind, D in pieces:
        key = frozenset(D)
        if key in seen:
            continue
        seen.add(key)
        dist = min(dZ[v] for v in D)
        r = max(cov.delta * dist, cov.eps) if dist != math.inf else cov.eps
        cov.elements.append(key)
        cov.kind.append(kind)
        cov.dist_to_Z.append(dist)
        cov.r.append(Fraction(r))
    # supports and tau
    point_tau = {}
    for k, D in enumerate(cov.elements):
        r = cov.r[k]
        lim = math.ceil(r) - 1 if r == int(r) else math.floor(r)
        dist = X.bfs(D, limit=max(0, lim))
        tk = {v: r - d for v, d in dist.items() if r - d > 0}
        cov.tau.append(tk)
        cov.support.append(frozenset(tk))
        for v, t in tk.items():
            point_tau.setdefault(v, {})[k] = t
    cov.point_tau = point_tau
    return cov


def audit_cover(cov: LSCover, gamma_bound=4):
    """Measure the five invariant families; returns a dict of checks."""
    X = cov.X
    res = {}
    # (1) diameter against r(k)
    diam_ratio = Fraction(0)
    for k, D in enumerate(cov.elements):
        d = X.diameter(D)
        diam_ratio = max(diam_ratio, Fraction(d) / cov.r[k])
    K1 = max(cov.a / cov.delta, Fraction(X.an_diam) * 2)
    res["diam"] = {"measured": diam_ratio, "declared": K1, "ok": diam_ratio <= K1}
    # (2) far: diam <= a * d(D, Z); near: d(D, Z) <= rho
    ok2 = True
    for k, D in enumerate(cov.elements):
        if cov.kind[k] == "far":
            if X.diameter(D) > cov.a * cov.dist_to_Z[k]:
                ok2 = False
        elif cov.dist_to_Z[k] > cov.rho:
            ok2 = False
    res["distance"] = {"ok": ok2}
    # (3) far supports avoid Z and stay in one component of X minus Z
    comp_of = {}
    for n, comp in enumerate(X.components(set(X.vertices) - cov.Z)):
        for v in comp:
            comp_of[v] = n
    ok3 = True
    for k, S in enumerate(cov.support):
        if cov.kind[k] != "far":
            continue
        if S & cov.Z or len({comp_of[v] for v in S}) > 1:
            ok3 = False
    res["components"] = {"ok": ok3}
    # (4) multiplicity
    mult = max(len(t) for t in cov.point_tau.values())
    bound = 2 * X.an_dim + 2
    res["multiplicity"] = {"measured": mult, "declared": bound, "ok": mult <= bound}
    # (5) scale comparability on overlapping supports
    gamma = Fraction(1)
    for ks in cov.point_tau.values():
        rs = [cov.r[k] for k in ks]
        gamma = max(gamma, max(rs) / min(rs))
    res["gamma"] = {"measured": gamma, "declared": Fraction(gamma_bound), "ok": gamma <= gamma_bound}
    covered = all(v in cov.point_tau for v in X.vertices)
    res["covering"] = {"ok": covered}
    res["ok"] = all(v["ok"] for v in res.values() if isinstance(v, dict))
    return res


# ------------------------------------------------------------ nerve

class NerveComplex:
    def __init__(self, cover, complex, index, fine, scale):
        self.cover = cover
        self.complex = complex
        self.index = index          # sorted element tuple -> cell
        self.fine = fine            # cell -> bool
        self.scale = scale

    @property
    def dim(self):
        return self.complex.dim

    def simplex(self, ks):
        return self.index[tuple(sorted(ks))]


def nerve(cover: LSCover, max_vertices=16) -> NerveComplex:
    """Simplices are the element sets sharing a common point, with faces."""
    tops = {tuple(sorted(ks)) for ks in cover.point_tau.values()}
    widest = max(len(t) for t in tops)
    if widest > max_vertices:
        raise CapacityError(f"nerve simplex with {widest} vertices exceeds max_vertices={max_vertices}")
    simplices = set()
    for t in tops:
        for m in range(1, len(t) + 1):
            simplices.update(itertools.combinations(t, m))
    simplices = sorted(simplices, key=lambda t: (len(t), t))
    index = {t: i for i, t in enumerate(simplices)}
    cells = []
    fine = []
    for t in simplices:
        d = len(t) - 1
        sc = max(cover.r[k] for k in t)
        bnd = [] if d == 0 else [(index[t[:m] + t[m + 1:]], (-1) ** m) for m in range(d + 1)]
        cells.append(Cell(d, bnd, sc ** d / math.factorial(d), sc, None, t))
        fine.append(any(cover.kind[k] == "near" for k in t))
    cx = CellComplex(cells, check=False)
    return NerveComplex(cover, cx, index, fine, [c.scale for c in cells])


def map_g(cover: LSCover, x):
    t = cover.point_tau.get(x)
    if not t:
        raise ChainError(f"no support contains {x}: the cover is broken")
    tot = sum(t.values(), Fraction(0))
    return {k: v / tot for k, v in sorted(t.items())}


def nerve_distance(cover, p, q):
    ks = set(p) | set(q)
    s = max(cover.r[k] for k in ks)
    return s * sum((abs(p.get(k, 0) - q.get(k, 0)) for k in ks), Fraction(0))


def lipschitz_g(cover: LSCover, nv: NerveComplex):
    """Largest ratio over adjacent vertices, and the bound computed from the
    measured gamma and nerve dimension."""
    X = cover.X
    best = Fraction(0)
    for u in X.vertices:
        gu = map_g(cover, u)
        for w in X.adj[u]:
            if w > u:
                best = max(best, nerve_distance(cover, gu, map_g(cover, w)))
    gamma = audit_cover(cover)["gamma"]["measured"]
    d = nv.dim
    return best, gamma ** 2 * (2 * d + 1) * (2 * d + 2)


def map_h0(cover: LSCover, nv: NerveComplex = None, central=True):
    """Each element goes to a nearest Z point.  Ties go to the candidate with
    the least total distance to the element (if `central`), then lowest id."""
    X = cover.X
    out = {}
    for k, D in enumerate(cover.elements):
        dist = X.bfs(D)
        near = min(dist.get(z, math.inf) for z in cover.Z)
        cands = sorted(z for z in cover.Z if dist.get(z, math.inf) == near)
        if central and len(cands) > 1:
            Ds = sorted(D)
            cands.sort(key=lambda z: (sum(X.dist(z, v) for v in Ds), z))
        out[k] = cands[0]
    return out


# ------------------------------------------------------------ whitney

def whitney(L, k):
    """Dyadic cubes of [0, L]^(k+1) that are kept once their side is at most
    their distance to the boundary, never below side 1."""
    note = ""
    if L < 2:
        raise ValueError("L must be at least 2")
    if L & (L - 1):
        p = 1 << (L - 1).bit_length()
        note = f"L={L} rounded up to {p}"
        L = p
    m = k + 1

    def dist(corner, s):
        return min(min(c, L - c - s) for c in corner)

    out = []
    stack = [((0,) * m, L)]
    while stack:
        corner, s = stack.pop()
        d = dist(corner, s)
        if s == 1 or s <= d:
            out.append({"corner": corner, "side": s, "dist": d, "boundary": d == 0})
            continue
        h = s // 2
        for off in itertools.product((0, h), repeat=m):
            stack.append((tuple(c + o for c, o in zip(corner, off)), h))
    out.sort(key=lambda c: (c["side"], c["corner"]))
    return {"L": L, "k": k, "cubes": out, "note": note}


def audit_whitney(W):
    L, m = W["L"], W["k"] + 1
    cubes = W["cubes"]
    cover = {}
    for c in cubes:
        for off in itertools.product(range(c["side"]), repeat=m):
            cell = tuple(a + o for a, o in zip(c["corner"], off))
            cover[cell] = cover.get(cell, 0) + 1
    tiling = len(cover) == L ** m and all(v == 1 for v in cover.values())
    side_ok = all(c["side"] >= 1 for c in cubes)
    bnd_ok = all(c["side"] == 1 for c in cubes if c["boundary"])
    ratio_ok = all(c["side"] <= c["dist"] and c["dist"] ** 2 <= 64 * c["side"] ** 2 * m
                   for c in cubes if not c["boundary"])
    return {"tiling": tiling, "side": side_ok, "boundary": bnd_ok, "ratio": ratio_ok,
            "count": len(cubes), "ok": tiling and side_ok and bnd_ok and ratio_ok}


# ------------------------------------------------------------ exploded simplex

class Exploded:
    def __init__(self, d, complex, cells, rho1, rho2, simplex, flags):
        self.d = d
        self.complex = complex
        self.cells = cells          # list of (face, flag)
        self.rho1 = rho1            # chain map to the simplex
        self.rho2 = rho2            # chain map to its barycentric subdivision
        self.simplex = simplex
        self.flags = flags

    def middle(self):
        full = tuple(range(self.d + 1))
        return [i for i, (f, fl) in enumerate(self.cells) if fl == (full,)]

    def push(self, which, c: Chain):
        mp, target = (self.rho1, self.simplex) if which == 1 else (self.rho2, self.flags)
        out = {}
        for i, v in c.coefs.items():
            if i in mp:
                j, s = mp[i]
                out[j] = out.get(j, 0) + s * v
        return Chain(c.dim, out, target)


def _faces(d):
    verts = range(d + 1)
    return [t for m in range(1, d + 2) for t in itertools.combinations(verts, m)]


def _simplex_complex(d):
    faces = _faces(d)
    index = {f: i for i, f in enumerate(faces)}
    cells = [Cell(len(f) - 1, [] if len(f) == 1 else
                  [(index[f[:m] + f[m + 1:]], (-1) ** m) for m in range(len(f))], 1, 1, None, f)
             for f in faces]
    return CellComplex(cells), index


def exploded_simplex(d):
    if not 1 <= d <= 4:
        raise ValueError("d must be between 1 and 4")
    faces = _faces(d)
    simplex, sidx = _simplex_complex(d)
    # flags of faces, strictly increasing
    flags = []

    def grow(fl):
        flags.append(fl)
        for f in faces:
            if len(f) > len(fl[-1]) and set(fl[-1]) < set(f):
                grow(fl + (f,))

    for f in faces:
        grow((f,))
    flags.sort(key=lambda fl: (len(fl), [faces.index(x) for x in fl]))
    fidx = {fl: i for i, fl in enumerate(flags)}
    fcells = [Cell(len(fl) - 1, [] if len(fl) == 1 else
                   [(fidx[fl[:m] + fl[m + 1:]], (-1) ** m) for m in range(len(fl))], 1, 1, None, fl)
              for fl in flags]
    flagcx = CellComplex(fcells)
    pairs = [(f, fl) for fl in flags for f in faces if set(f) <= set(fl[0])]
    pairs.sort(key=lambda p: (len(p[0]) + len(p[1]) - 2, len(p[0]), faces.index(p[0]), fidx[p[1]]))
    pidx = {p: i for i, p in enumerate(pairs)}
    cells = []
    for f, fl in pairs:
        bnd = []
        df = len(f) - 1
        if df > 0:
            for m in range(len(f)):
                bnd.append((pidx[(f[:m] + f[m + 1:], fl)], (-1) ** m))
        if len(fl) > 1:
            sg = (-1) ** df
            for m in range(len(fl)):
                bnd.append((pidx[(f, fl[:m] + fl[m + 1:])], sg * (-1) ** m))
        cells.append(Cell(df + len(fl) - 1, bnd, 1, 1, None, (f, fl)))
    cx = CellComplex(cells)
    rho1 = {i: (sidx[f], 1) for i, (f, fl) in enumerate(pairs) if len(fl) == 1}
    rho2 = {i: (fidx[fl], 1) for i, (f, fl) in enumerate(pairs) if len(f) == 1}
    return Exploded(d, cx, pairs, rho1, rho2, simplex, flagcx)


# ------------------------------------------------------------ pipeline

class Pipeline:
    """Cover, nerve and the maps g, h for a tree-product level set."""

    def __init__(self, space, Z, eps=Fraction(3, 2), a=8, b=1, m=1):
        if Z.t != int(Z.t) or any(c != 1 for c in space.slope):
            raise RangeError("the pipeline needs slope (1,...,1) and an integer level")
        self.space = space
        self.Z = Z
        self.X = tree_product_space(space)
        zhost = {Z.host_cell[v] for v in Z.complex.cells_of_dim(0)}
        self.cover = ls_cover(self.X, zhost, eps, a, b)
        self.nerve = nerve(self.cover)
        self.h0 = map_h0(self.cover, self.nerve)
        self.m = m
        self.sigma = {}
        self.sd = barycentric_subdivide(self.nerve.complex, skeleton=m + 1,
                                        cells=self._used_cells(m))
        self._hcache = {}
        self._bary = {car: v for v, car in enumerate(self.sd.vertex_carrier)}
        self.trace = []

    def _used_cells(self, m):
        """Nerve cells g can touch on m-chains: every star, the common part
        of the stars of each edge (and square when m >= 2), and all small
        faces of the stars."""
        X = self.X
        nv = self.nerve
        used = set()
        for x in X.vertices:
            sx = self.sigma_of(x)
            used.add(nv.simplex(sx))
            for k in range(1, min(m + 1, len(sx)) + 1):
                for f in itertools.combinations(sx, k):
                    used.add(nv.simplex(f))
            for y in X.adj[x]:
                common = set(sx) & set(self.sigma_of(y))
                if common:
                    used.add(nv.simplex(common))
        if m >= 2:
            host = self.space.complex
            for sq in host.cells_of_dim(2):
                common = set.intersection(*(set(self.sigma_of(x)) for x in host.vertices(sq)))
                if common:
                    used.add(nv.simplex(common))
        return used

    # g on host chains -------------------------------------------------
    def sigma_of(self, x):
        s = self.sigma.get(x)
        if s is None:
            s = tuple(sorted(self.cover.point_tau[x]))
            self.sigma[x] = s
        return s

    def _bvert(self, ks):
        return self._bary[self.nerve.simplex(ks)]

    def _sd_edge(self, u, w):
        """Sd 1-chain from fine vertex u to fine vertex w (comparable)."""
        if u == w:
            return {}
        st = (u, w) if u < w else (w, u)
        j = self.sd.simplex_index[st]
        return {j: Fraction(1 if u < w else -1)}

    def g_vertex(self, x):
        return self._bvert(self.sigma_of(x))

    def g_edge_path(self, x, y):
        sx, sy = set(self.sigma_of(x)), set(self.sigma_of(y))
        mid = sx & sy
        if not mid:
            raise ChainError("adjacent vertices with disjoint stars; eps too small")
        a, m, b = self.g_vertex(x), self._bvert(mid), self.g_vertex(y)
        out = {}
        for u, w in ((a, m), (m, b)):
            for j, v in self._sd_edge(u, w).items():
                out[j] = out.get(j, 0) + v
        return {j: v for j, v in out.items() if v}

    def g_chain(self, c: Chain) -> Chain:
        host = self.space.complex
        fine = self.sd.fine
        out = {}

        def add(d):
            for j, v in d.items():
                out[j] = out.get(j, 0) + v

        if c.dim == 0:
            for x, v in c.coefs.items():
                add({self.g_vertex(x): v})
            return Chain(0, out, fine)
        if c.dim == 1:
            for e, v in c.coefs.items():
                (y, sy), (x, sx) = host.cells[e].boundary
                if sy < 0:
                    x, y = y, x
                add({j: w * v for j, w in self.g_edge_path(x, y).items()})
            return Chain(1, out, fine)
        if c.dim == 2:
            for sq, v in c.coefs.items():
                verts = host.vertices(sq)
                common = set.intersection(*(set(self.sigma_of(x)) for x in verts))
                if not common:
                    raise ChainError("square with no common support; eps too small")
                b = self._bvert(common)
                loop = self.g_chain(boundary(host.cell_chain(sq)))
                for j, w in loop.coefs.items():
                    verts_j = tuple(sorted(fine.vertices(j)))
                    if b in verts_j:
                        continue
                    st, sg = _sort_sign((b,) + verts_j)
                    k = self.sd.simplex_index[st]
                    out[k] = out.get(k, 0) + sg * w * v
            return Chain(2, {j: v for j, v in out.items() if v}, fine)
        raise RangeError("g is implemented up to 2-chains")

    # h on subdivision chains -------------------------------------------
    def h_vertex(self, fv):
        car = self.sd.vertex_carrier[fv]
        ks = self.nerve.complex.cells[car].label
        z_host = self.h0[max(ks)]
        return self.Z.by_host[z_host]

    def h_simplex(self, j):
        got = self._hcache.get(j)
        if got is not None:
            return got
        fine = self.sd.fine
        zc = self.Z.complex
        d = fine.cells[j].dim
        if d == 0:
            out = Chain(0, {self.h_vertex(j): 1}, zc)
        else:
            bd = Chain(d - 1, {}, zc)
            for f, s in fine.cells[j].boundary:
                bd = bd + s * self.h_simplex(f)
            out = Chain(d, {}, zc) if bd.is_zero() else cone_fill(self.space, self.Z, bd).filling
        self._hcache[j] = out
        return out

    def h_chain(self, c: Chain) -> Chain:
        zc = self.Z.complex
        out = Chain(c.dim, {}, zc)
        for j, v in c.coefs.items():
            out = out + v * self.h_simplex(j)
        return out

    # small displacement -----------------------------------------------
    def displacement(self, alpha: Chain) -> Chain:
        """R with dR = alpha - h g alpha (+ R(d alpha) terms cancel on cycles)."""
        zc = self.Z.complex

        def rv(z):
            x = self.Z.host_cell[z]
            hz = self.h_simplex(self.g_vertex(x))
            return cone_fill(self.space, self.Z, Chain(0, {z: 1}, zc) - hz).filling

        if alpha.dim == 0:
            out = Chain(1, {}, zc)
            for z, v in alpha.coefs.items():
                out = out + v * rv(z)
            return out
        out = Chain(2, {}, zc)
        for e, v in alpha.coefs.items():
            ec = zc.cell_chain(e)
            img = self.h_chain(self.g_chain(self.Z.to_host(ec)))
            (hb, sb), (ta, sa) = zc.cells[e].boundary
            if sb < 0:
                ta, hb = hb, ta
            loop = ec - img - rv(hb) + rv(ta)
            if not loop.is_zero():
                out = out + v * cone_fill(self.space, self.Z, loop).filling
        return out


def undistorted_fill(space, Z, alpha: Chain, beta: Chain, pipeline: Pipeline = None, eps=Fraction(3, 2)):
    """Push an ambient filling beta of alpha into the level set Z.

    Returns a FillingResult on Z whose chain has boundary exactly alpha; the
    per-stage masses are kept in `pipeline.trace`."""
    import time
    t0 = time.perf_counter()
    zc = Z.complex
    m = alpha.dim + 1
    if m > space.n - 1:
        raise RangeError("undistorted_fill handles (m-1)-cycles with m <= n-1")
    if alpha.is_zero():
        return FillingResult(Chain(m, {}, zc), "cone", Fraction(0), "optimal", None, 0)
    if boundary(beta) != Z.to_host(alpha):
        raise ChainError("beta does not fill alpha in the host")
    pl = pipeline or Pipeline(space, Z, eps, m=m)
    stage = "g"
    try:
        A = pl.g_chain(Z.to_host(alpha))
        Bb = pl.g_chain(beta)
        stage = "ff_deform"
        dA = ff_deform(A)
        dB = ff_deform(Bb)
        stage = "h"
        hq = pl.h_chain(dA.q_chain)
        hp = pl.h_chain(pl.sd.refine(dB.p_chain))
        stage = "displacement"
        R = pl.displacement(alpha)
    except CapacityError as ex:
        raise CapacityError(f"stage {stage}: {ex}") from ex
    out = R + hq + hp
    if boundary(out) != alpha:
        raise ChainError("assembled filling is not exact")
    pl.trace.append({"mass_beta": mass(beta), "mass_gA": mass(A), "mass_gB": mass(Bb),
                     "mass_P": mass(dB.p_chain), "mass_Q": mass(dA.q_chain),
                     "mass_R": mass(R), "mass_hQ": mass(hq), "mass_hP": mass(hp),
                     "mass_out": mass(out)})
    return FillingResult(out, "cone", mass(out), "optimal", None,
                         int((time.perf_counter() - t0) * 1000), note="pipeline")


def trace_csv(trace):
    buf = io.StringIO()
    if not trace:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(trace[0]))
    w.writeheader()
    for row in trace:
        w.writerow({k: str(v) for k, v in row.items()})
    return buf.getvalue()
