"""Model spaces: euclidean grids, truncated trees, tree products with a
Busemann-type height, level sets of that height, and test cycles."""
from __future__ import annotations

import random
from collections import deque
from fractions import Fraction

from .chains import (Cell, CellComplex, Chain, ChainError, boundary, mass,
                     triangulate)

DEFAULT_CELL_CAP = 600_000


class CapacityError(ChainError):
    pass


class EmptyLevelError(ChainError):
    pass


def _product_complex(factors, cap):
    """Cubical product of 1-dimensional factors.

    Each factor is (coords, edges) with coords[v] the vertex coordinate and
    edges a list of (tail, head).  Items of a factor are numbered vertices
    first, then edges.  Returns (complex, key list, key->index)."""
    sizes = [len(c) + len(e) for c, e in factors]
    total = 1
    for s in sizes:
        total *= s
    if total > cap:
        raise CapacityError(f"product complex would have {total} cells (cap {cap})")
    nvs = [len(c) for c, _ in factors]
    n = len(factors)

    def item_dim(f, it):
        return 0 if it < nvs[f] else 1

    # enumerate keys by dimension so that faces precede cofaces
    keys = []
    stack = [()]
    for f in range(n):
        stack = [k + (it,) for k in stack for it in range(sizes[f])]
    keys = sorted(stack, key=lambda k: (sum(item_dim(f, it) for f, it in enumerate(k)), k))
    index = {k: i for i, k in enumerate(keys)}
    cells = []
    for k in keys:
        dim = 0
        bnd = []
        for f, it in enumerate(k):
            if it >= nvs[f]:
                a, b = factors[f][1][it - nvs[f]]
                sg = -1 if dim % 2 else 1
                bnd.append((index[k[:f] + (b,) + k[f + 1:]], sg))
                bnd.append((index[k[:f] + (a,) + k[f + 1:]], -sg))
                dim += 1
        coords = None
        if dim == 0:
            coords = tuple(factors[f][0][it] for f, it in enumerate(k))
        cells.append(Cell(dim, bnd, 1, 1, coords, k))
    return CellComplex(cells, check=False), keys, index


def build_grid(L, dims, cap=DEFAULT_CELL_CAP) -> CellComplex:
    if L < 1 or dims not in (2, 3):
        raise ValueError("need L >= 1 and dims in {2, 3}")
    path = ([Fraction(i) for i in range(L + 1)], [(i, i + 1) for i in range(L)])
    cx, _, _ = _product_complex([path] * dims, cap)
    return cx


class TruncatedTree:
    """Rooted q-ary tree of depth D; vertices are digit words, level = length.
    The distinguished end points up through the root."""

    def __init__(self, q, D, cap=DEFAULT_CELL_CAP):
        if q < 2 or D < 1:
            raise ValueError("need q >= 2 and D >= 1")
        n = (q ** (D + 1) - 1) // (q - 1)
        if n > cap:
            raise CapacityError(f"tree would have {n} vertices (cap {cap})")
        self.q, self.D = q, D
        words = [""]
        frontier = [""]
        for _ in range(D):
            frontier = [w + str(d) for w in frontier for d in range(q)] if q <= 10 else \
                [w + chr(48 + d) for w in frontier for d in range(q)]
            words.extend(frontier)
        self.words = words
        self.index = {w: i for i, w in enumerate(words)}
        self.level = [len(w) for w in words]
        self.parent = [None] + [self.index[w[:-1]] for w in words[1:]]
        self.children = [[] for _ in words]
        for i, p in enumerate(self.parent):
            if p is not None:
                self.children[p].append(i)
        # edge j joins parent(j+1) -> j+1
        self.edges = [(self.parent[i], i) for i in range(1, len(words))]
        self.leaves = [i for i in range(len(words)) if self.level[i] == D]

    def __len__(self):
        return len(self.words)

    def busemann(self, v):
        return self.level[v]

    def is_below(self, u, v):
        """True if u lies in the subtree of v (u == v allowed)."""
        return self.words[u].startswith(self.words[v])

    def ancestor(self, v, k=1):
        for _ in range(k):
            v = self.parent[v]
            if v is None:
                raise CapacityError("walked above the root")
        return v

    def meet(self, u, v):
        a, b = self.words[u], self.words[v]
        m = 0
        while m < min(len(a), len(b)) and a[m] == b[m]:
            m += 1
        return self.index[a[:m]]

    def dist(self, u, v):
        w = self.meet(u, v)
        return self.level[u] + self.level[v] - 2 * self.level[w]

    def leaves_below(self, v):
        p = self.words[v]
        return [l for l in self.leaves if self.words[l].startswith(p)]

    def descend(self, v, leaf, k):
        """Vertex k steps below v on the way to `leaf`."""
        lw = self.words[leaf]
        target = len(self.words[v]) + k
        if target > len(lw) or not lw.startswith(self.words[v]):
            raise CapacityError("descent leaves the truncated tree")
        return self.index[lw[:target]]


def build_tree(q, D, cap=DEFAULT_CELL_CAP) -> TruncatedTree:
    return TruncatedTree(q, D, cap)


class TreeProductSpace:
    def __init__(self, trees, slope, C0, cap=DEFAULT_CELL_CAP):
        if len(slope) != len(trees):
            raise ValueError("slope length must match the number of factors")
        if any(int(c) != c or c < 1 for c in slope):
            raise ValueError("slope entries must be positive integers")
        self.factors = list(trees)
        self.n = len(trees)
        self.slope = tuple(int(c) for c in slope)
        self.C0 = int(C0)
        facs = [([Fraction(l) for l in t.level], t.edges) for t in trees]
        self.complex, self.keys, self.key_index = _product_complex(facs, cap)
        cx = self.complex
        self.vertex_index = {}
        self.h = {}
        for i in cx.cells_of_dim(0):
            k = self.keys[i]
            self.vertex_index[k] = i
            self.h[i] = self.C0 - sum(c * t.level[v] for c, t, v in zip(self.slope, trees, k))
        self._margin = None

    def vertex(self, tup):
        return self.vertex_index[tuple(tup)]

    def vertex_tuple(self, i):
        return self.keys[i]

    def h_of(self, tup):
        return self.C0 - sum(c * t.level[v] for c, t, v in zip(self.slope, self.factors, tup))

    def h_range(self, i):
        hs = [self.h[v] for v in self.complex.vertices(i)]
        return min(hs), max(hs)

    def levels(self, tup):
        return tuple(t.level[v] for t, v in zip(self.factors, tup))

    def vertex_margin(self, tup):
        return min(min(t.level[v], t.D - t.level[v]) for t, v in zip(self.factors, tup))

    @property
    def margin(self):
        """Per-cell distance from the truncation boundary (root or leaf level)."""
        if self._margin is None:
            cx = self.complex
            m = []
            for i in range(len(cx)):
                m.append(min(self.vertex_margin(self.keys[v]) for v in cx.vertices(i)))
            self._margin = m
        return self._margin

    def neighbors(self, tup):
        """Product-graph neighbours: move one factor along one tree edge."""
        out = []
        for f, t in enumerate(self.factors):
            v = tup[f]
            nb = list(t.children[v])
            if t.parent[v] is not None:
                nb.append(t.parent[v])
            for u in nb:
                out.append(tup[:f] + (u,) + tup[f + 1:])
        return out

    def dist(self, a, b):
        """Graph distance in the 1-skeleton (sum of tree distances)."""
        return sum(t.dist(u, v) for t, u, v in zip(self.factors, a, b))


def build_tree_product(trees, slope, C0, cap=DEFAULT_CELL_CAP) -> TreeProductSpace:
    return TreeProductSpace(trees, slope, C0, cap)


# ------------------------------------------------------------- level sets

class HorosphereComplex:
    """Level set {h = t} of a tree product, sliced cell by cell.

    complex: the polytopal slice complex; tri: its stellar triangulation;
    host_cell[i]: the host cell whose slice is cell i (a host vertex for
    0-cells lying on host vertices)."""

    def __init__(self, space, t, complex, host_cell, upper, tri):
        self.space = space
        self.t = t
        self.complex = complex
        self.host_cell = host_cell
        self.upper = upper
        self.tri = tri
        self.by_host = {h: i for i, h in enumerate(host_cell)}

    @property
    def dim(self):
        return self.complex.dim

    def vertex_of(self, tup):
        """Z vertex sitting on the host vertex `tup`."""
        return self.by_host[self.space.vertex(tup)]

    def vertex_host_tuple(self, i):
        hc = self.host_cell[i]
        if self.space.complex.cells[hc].dim != 0:
            return None
        return self.space.keys[hc]

    def to_host(self, c: Chain) -> Chain:
        """Chain map into the host pushing every slice to the upper side."""
        if c.host is not self.complex:
            raise ChainError("chain is not on this level set")
        out = {}
        for i, v in c.coefs.items():
            for j, s in self.upper[i].items():
                w = out.get(j, 0) + s * v
                if w:
                    out[j] = w
                else:
                    del out[j]
        return Chain._raw(c.dim, out, self.space.complex)

    def graph(self):
        """Adjacency of the 1-skeleton as {vertex: [vertex, ...]}."""
        return _graph(self.complex)

    def congruence_classes(self):
        """Hash each cell by its vertex coordinates translated to the origin."""
        cx = self.complex
        classes = set()
        for i in range(len(cx)):
            pts = sorted(cx.cells[v].coords for v in cx.vertices(i))
            base = pts[0]
            classes.add((cx.cells[i].dim, tuple(tuple(a - b for a, b in zip(p, base)) for p in pts)))
        return classes


def _slice_data(space, t):
    cx = space.complex
    rng = {}
    proper = []
    for i in range(len(cx)):
        c = cx.cells[i]
        if c.dim == 0:
            continue
        lo, hi = space.h_range(i)
        rng[i] = (lo, hi)
        if lo < t < hi:
            proper.append(i)
    return rng, proper


def horosphere(space: TreeProductSpace, t, triangulated=True) -> HorosphereComplex:
    t = Fraction(t)
    cx = space.complex
    h = space.h
    rng, proper = _slice_data(space, t)
    on_level = [v for v in cx.cells_of_dim(0) if h[v] == t]
    if not proper and not on_level:
        raise EmptyLevelError(f"level {t} misses the space")
    proper_set = set(proper)

    cells_host = []
    zi = {}
    for v in on_level:
        zi[v] = len(cells_host)
        cells_host.append(v)
    for p in proper:
        zi[p] = len(cells_host)
        cells_host.append(p)

    def S(j):
        """Perturbed slice of host cell j as {z index: sign}."""
        c = cx.cells[j]
        if c.dim == 1:
            (b, sb), (a, sa) = c.boundary
            if sb < 0:
                a, b = b, a
            ha, hb = h[a], h[b]
            if ha < t < hb:
                return {zi[j]: 1}
            if ha > t > hb:
                return {zi[j]: -1}
            if ha < t == hb:
                return {zi[b]: 1}
            if ha == t > hb:
                return {zi[a]: -1}
            return {}
        if j in proper_set:
            return {zi[j]: 1}
        return {}

    cells = []
    upper = []
    for j in cells_host:
        c = cx.cells[j]
        if c.dim == 0:
            cells.append(Cell(0, (), 1, 1, c.coords, ("v", j)))
            upper.append({j: 1})
            continue
        if c.dim == 1:
            (b, sb), (a, sa) = c.boundary
            if sb < 0:
                a, b = b, a
            pa, pb = cx.cells[a].coords, cx.cells[b].coords
            lam = (t - h[a]) / (h[b] - h[a])
            coords = tuple(x + lam * (y - x) for x, y in zip(pa, pb))
            cells.append(Cell(0, (), 1, 1, coords, ("e", j)))
            upper.append({b if h[b] > t else a: 1})
            continue
        bnd = {}
        for f, s in c.boundary:
            for k, u in S(f).items():
                bnd[k] = bnd.get(k, 0) + s * u
        bnd = [(k, v) for k, v in sorted(bnd.items()) if v]
        sign = 1 if c.dim % 2 else -1
        up = {}
        for f, s in c.boundary:
            if rng.get(f, (h.get(f), h.get(f)))[0] >= t:
                up[f] = up.get(f, 0) + sign * s
        cells.append(Cell(c.dim - 1, bnd, 1, 1, None, ("c", j)))
        upper.append({k: v for k, v in up.items() if v})
    z = CellComplex(cells, check=False)
    # exact projected volumes via a stellar triangulation
    ref = triangulate(z)
    weights = []
    for i in range(len(z)):
        if z.cells[i].dim == 0:
            weights.append(Fraction(1))
        else:
            weights.append(sum((ref.fine.cells[j].weight for j in ref.pieces[i]), Fraction(0)))
    cells = [Cell(c.dim, c.boundary, w, 1, c.coords, c.label) for c, w in zip(z.cells, weights)]
    z = CellComplex(cells, check=False)
    tri = triangulate(z) if triangulated else None
    return HorosphereComplex(space, t, z, cells_host, upper, tri)


def brute_force_slice(space, t):
    """Independent slice: for each host cell, the set of points of the cell
    where h = t, computed from the cell's vertices and edges only.  Returns
    (set of level points as (host edge or vertex)), {host cell: dimension}."""
    t = Fraction(t)
    cx = space.complex
    pts = set()
    dims = {}
    for i in range(len(cx)):
        c = cx.cells[i]
        vs = cx.vertices(i)
        hs = [space.h[v] for v in vs]
        if c.dim == 0:
            if hs[0] == t:
                pts.add(("v", i))
            continue
        if min(hs) < t < max(hs):
            dims[i] = c.dim - 1
            if c.dim == 1:
                pts.add(("e", i))
    return pts, dims


# ---------------------------------------------------------- test cycles

def _geodesic_through(tree, apex, down):
    """Leaf-to-leaf path through `apex` descending `down` steps each way along
    the first two children.  Returns (vertex list, edge list with signs)."""
    if len(tree.children[apex]) < 2:
        raise CapacityError("apex has no room below it")
    left = [apex]
    right = [apex]
    v = tree.children[apex][0]
    for k in range(down):
        left.append(v)
        if k < down - 1:
            if not tree.children[v]:
                raise CapacityError("geodesic leaves the truncation")
            v = tree.children[v][0]
    v = tree.children[apex][1]
    for k in range(down):
        right.append(v)
        if k < down - 1:
            if not tree.children[v]:
                raise CapacityError("geodesic leaves the truncation")
            v = tree.children[v][0]
    path = list(reversed(left)) + right[1:]
    return path


def hard_sphere(space: TreeProductSpace, r, Z: HorosphereComplex = None, extra=1):
    """The level-0 cross-section of an apartment whose top sits at height r+1.

    Returns (cycle on Z, apartment description).  The apartment is a product
    of leaf-to-leaf geodesics through apex vertices chosen so that the apex
    tuple has h = r + 1."""
    if Z is None:
        Z = horosphere(space, 0, triangulated=False)
    if Z.t != 0:
        raise ValueError("hard_sphere lives on the level-0 set")
    R = r + 1
    c = space.slope
    n = space.n
    trees = space.factors
    # the apex levels must satisfy sum c_i l_i = C0 - R and l_i + reach_i + extra <= D
    reach = [-(-R // ci) for ci in c]
    need = space.C0 - R
    levels = [0] * n
    rem = need
    for i in range(n):
        room = trees[i].D - reach[i] - extra
        take = min(room, rem // c[i]) if room >= 0 else -1
        if take < 0:
            break
        levels[i] = take
        rem -= take * c[i]
    if rem != 0 or any(trees[i].D - reach[i] - extra - levels[i] < 0 for i in range(n)) or need < 0:
        total = need + sum(ci * (ri + extra) for ci, ri in zip(c, reach))
        req = max(max(reach) + extra, -(-total // sum(c)))
        raise CapacityError(f"hard_sphere(r={r}) needs depth >= {req} in every factor (and C0 >= {R})")
    paths = []
    for i in range(n):
        apex = trees[i].index["0" * levels[i]]
        down = trees[i].D - levels[i]
        paths.append(_geodesic_through(trees[i], apex, down))
    # oriented top cells of the apartment
    nv = [len(t) for t in trees]
    apt = {}
    steps = []
    for i in range(n):
        p = paths[i]
        st = []
        for a, b in zip(p, p[1:]):
            if trees[i].parent[b] == a:
                st.append((b - 1 + nv[i], 1))
            else:
                st.append((a - 1 + nv[i], -1))
        steps.append(st)
    combos = [((), 1)]
    for st in steps:
        combos = [(k + (e,), s * se) for k, s in combos for e, se in st]
    for k, s in combos:
        apt[space.key_index[k]] = s
    cyc = {}
    zc = Z.complex
    for p, s in apt.items():
        zi = Z.by_host.get(p)
        if zi is not None and zc.cells[zi].dim == n - 1:
            cyc[zi] = cyc.get(zi, 0) + s
    alpha = Chain(n - 1, cyc, zc)
    if n - 1 > 0 and not boundary(alpha).is_zero():
        raise CapacityError(f"hard_sphere(r={r}) leaves the truncation; increase depth")
    info = {"apex_levels": levels, "paths": paths, "apartment": apt, "R": R}
    return alpha, info


def _graph(cx):
    adj = {v: [] for v in cx.cells_of_dim(0)}
    for e in cx.cells_of_dim(1):
        a, b = [j for j, _ in cx.cells[e].boundary]
        adj[a].append(b)
        adj[b].append(a)
    return adj


def random_cycle(Z, k, budget, seed):
    """A k-cycle of mass <= budget on a level set (or any complex): the
    boundary of a random connected patch of (k+1)-cells, or a closed walk
    when there are no (k+1)-cells."""
    cx = Z if isinstance(Z, CellComplex) else Z.complex
    if budget <= 0:
        return Chain(k, {}, cx)
    rng = random.Random(seed)
    if k == 0:
        vs = list(cx.cells_of_dim(0))
        adj = _graph(cx)
        a = rng.choice(vs)
        seen = {a: 0}
        dq = deque([a])
        while dq:
            u = dq.popleft()
            for w in adj[u]:
                if w not in seen:
                    seen[w] = seen[u] + 1
                    dq.append(w)
        far = [v for v, d in seen.items() if 0 < d]
        if not far:
            return Chain(0, {}, cx)
        b = rng.choice(sorted(far))
        return Chain(0, {a: 1, b: -1}, cx)
    if k + 1 <= cx.dim:
        tops = list(cx.cells_of_dim(k + 1))
        faces = {}
        for c in tops:
            for f, _ in cx.cells[c].boundary:
                faces.setdefault(f, []).append(c)
        start = rng.choice(tops)
        patch = {start: Fraction(1)}
        best = Chain(k + 1, patch, cx)
        cur = boundary(best)
        if mass(cur) > budget:
            return Chain(k, {}, cx)
        frontier = set()

        def grow(c):
            for f, _ in cx.cells[c].boundary:
                for d in faces[f]:
                    if d not in patch:
                        frontier.add(d)

        grow(start)
        tries = 0
        while frontier and tries < 200:
            d = rng.choice(sorted(frontier))
            frontier.discard(d)
            trial = Chain(k + 1, {**patch, d: Fraction(1)}, cx)
            b = boundary(trial)
            tries += 1
            if mass(b) <= budget:
                patch[d] = Fraction(1)
                cur = b
                grow(d)
        return cur
    # closed walk in the 1-skeleton
    if k != 1:
        raise ChainError("random_cycle supports k <= dim Z, or k = 1 on graphs")
    adj = _graph(cx)
    edge_of = {}
    for e in cx.cells_of_dim(1):
        (b, sb), (a, sa) = cx.cells[e].boundary
        if sb < 0:
            a, b = b, a
        edge_of[(a, b)] = (e, 1)
        edge_of[(b, a)] = (e, -1)
    v0 = rng.choice(list(cx.cells_of_dim(0)))
    walk = [v0]
    for _ in range(int(budget) // 2):
        walk.append(rng.choice(adj[walk[-1]]))
    # close up by a shortest path back to v0
    prev = {walk[-1]: None}
    dq = deque([walk[-1]])
    while dq and v0 not in prev:
        u = dq.popleft()
        for w in adj[u]:
            if w not in prev:
                prev[w] = u
                dq.append(w)
    back = []
    u = v0
    while u is not None and u != walk[-1]:
        back.append(u)
        u = prev[u]
    walk += list(reversed(back))
    coefs = {}
    for a, b in zip(walk, walk[1:]):
        e, s = edge_of[(a, b)]
        coefs[e] = coefs.get(e, 0) + s
    ch = Chain(1, coefs, cx)
    return ch if mass(ch) <= budget else Chain(1, {}, cx)


def oriented_patch(Z: HorosphereComplex, cells):
    """Top cells of a patch signed so that they agree across shared faces.
    Returns the patch chain; its boundary is the loop around the patch."""
    cx = Z.complex
    cells = set(cells)
    if not cells:
        raise ChainError("empty patch")
    k = cx.cells[next(iter(cells))].dim
    by_face = {}
    for c in cells:
        for f, s in cx.cells[c].boundary:
            by_face.setdefault(f, []).append((c, s))
    sign = {}
    for start in sorted(cells):
        if start in sign:
            continue
        sign[start] = 1
        dq = deque([start])
        while dq:
            c = dq.popleft()
            for f, s in cx.cells[c].boundary:
                for d, t in by_face[f]:
                    if d == c:
                        continue
                    want = -sign[c] * s * t
                    if d not in sign:
                        sign[d] = want
                        dq.append(d)
                    elif sign[d] != want:
                        raise ChainError("patch is not orientable or not a surface")
    return Chain(k, sign, cx)


def apartment_coords(space, tup):
    """Signed distance from the root along the geodesic through the leaves
    0...0 and 1...1 of each factor, or None off that geodesic."""
    out = []
    for t, v in zip(space.factors, tup):
        w = t.words[v]
        if w and len(set(w)) > 1 or (w and w[0] not in "01"):
            return None
        out.append(0 if not w else (len(w) if w[0] == "0" else -len(w)))
    return tuple(out)


def apartment_loops(space, Z: HorosphereComplex):
    """Loops on the cross-section of one apartment with the level set: caps
    cut off at each height along each axis, and corner triangles of one face.
    Returns [(name, loop, patch chain)], smallest patches first."""
    if space.n != 3 or Z.dim != 2:
        raise ChainError("apartment loops need three factors and a 2-dimensional level set")
    cx = space.complex
    coords = {}
    for z in Z.complex.cells_of_dim(2):
        pts = [apartment_coords(space, space.keys[v]) for v in cx.vertices(Z.host_cell[z])]
        if all(p is not None for p in pts):
            coords[z] = pts
    R = space.C0
    regions = []
    for c in range(R - 1, -1, -1):
        for i in range(3):
            regions.append((f"cap{i}+{c}", [z for z, pts in coords.items()
                                           if all(p[i] >= c for p in pts)]))
    for s in range(1, R + 1):
        regions.append((f"corner{s}", [z for z, pts in coords.items()
                                       if all(min(p) >= 0 and p[0] >= R - s for p in pts)]))
    out = []
    seen = set()
    for name, cells in regions:
        key = frozenset(cells)
        if not cells or key in seen:
            continue
        seen.add(key)
        patch = oriented_patch(Z, cells)
        loop = boundary(patch)
        if not loop.is_zero():
            out.append((name, loop, patch))
    out.sort(key=lambda t: (mass(t[2]), t[0]))
    return out


# ------------------------------------------------------------- config

SPACE_KEYS = {"factors", "q", "depth", "slope", "C0", "level", "caps", "seed"}


def space_from_config(cfg):
    unknown = set(cfg) - SPACE_KEYS
    if unknown:
        raise ValueError(f"unknown space keys: {sorted(unknown)}")
    n = int(cfg.get("factors", 2))
    q = int(cfg.get("q", 2))
    D = int(cfg.get("depth", 3))
    slope = tuple(cfg.get("slope", [1] * n))
    C0 = int(cfg.get("C0", D))
    cap = int(cfg.get("caps", {}).get("cells", DEFAULT_CELL_CAP))
    trees = [build_tree(q, D, cap) for _ in range(n)]
    return build_tree_product(trees, slope, C0, cap)
