"""Exact chain algebra on finite weighted cell complexes.

Coefficients, weights and scales are Fractions.  Cells are stored in a flat
tuple and referenced by index; boundaries are tuples of (index, sign) pairs.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import factorial


class ChainError(ValueError):
    pass


class DomainError(ChainError):
    pass


class GeometryError(ChainError):
    pass


class CarrierMismatch(ChainError):
    pass


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


class Cell:
    __slots__ = ("dim", "boundary", "weight", "scale", "coords", "label")

    def __init__(self, dim, boundary=(), weight=1, scale=1, coords=None, label=None):
        self.dim = dim
        self.boundary = tuple((int(i), int(s)) for i, s in boundary)
        self.weight = frac(weight)
        self.scale = frac(scale)
        self.coords = None if coords is None else tuple(frac(c) for c in coords)
        self.label = label

    def __repr__(self):
        return f"Cell(dim={self.dim}, label={self.label!r})"


class CellComplex:
    """Immutable list of cells.  Only 0-cells carry coordinates; the geometry
    of a higher cell is the convex hull of its vertices."""

    def __init__(self, cells, check=True):
        self.cells = tuple(cells)
        by_dim = {}
        for i, c in enumerate(self.cells):
            by_dim.setdefault(c.dim, []).append(i)
        self._by_dim = {d: tuple(v) for d, v in by_dim.items()}
        self._verts = {}
        self._label_index = None
        if check:
            self._validate()

    def _validate(self):
        for i, c in enumerate(self.cells):
            if c.weight <= 0 or c.scale <= 0:
                raise ChainError(f"cell {i}: weight and scale must be positive")
            for j, s in c.boundary:
                if not 0 <= j < len(self.cells) or self.cells[j].dim != c.dim - 1:
                    raise ChainError(f"cell {i}: bad boundary entry {j}")
                if s not in (1, -1):
                    raise ChainError(f"cell {i}: incidence must be +-1")

    def __len__(self):
        return len(self.cells)

    @property
    def dim(self):
        return max(self._by_dim) if self._by_dim else -1

    def cells_of_dim(self, d):
        return self._by_dim.get(d, ())

    def count(self, d):
        return len(self.cells_of_dim(d))

    def vertices(self, i) -> frozenset:
        v = self._verts.get(i)
        if v is None:
            c = self.cells[i]
            if c.dim == 0:
                v = frozenset((i,))
            else:
                v = frozenset().union(*(self.vertices(j) for j, _ in c.boundary))
            self._verts[i] = v
        return v

    def is_simplex(self, i):
        return len(self.vertices(i)) == self.cells[i].dim + 1

    def index_of_label(self, label):
        if self._label_index is None:
            self._label_index = {c.label: i for i, c in enumerate(self.cells)
                                 if c.label is not None}
        return self._label_index[label]

    def chain(self, dim, coefs=None):
        return Chain(dim, coefs or {}, self)

    def cell_chain(self, i, coef=1):
        return Chain(self.cells[i].dim, {i: frac(coef)}, self)

    def to_json(self):
        out = []
        for i, c in enumerate(self.cells):
            rec = {"id": i, "dim": c.dim,
                   "boundary": [[j, s] for j, s in c.boundary],
                   "weight": str(c.weight), "scale": str(c.scale)}
            if c.coords is not None:
                rec["coords"] = [str(x) for x in c.coords]
            if c.label is not None:
                rec["label"] = str(c.label)
            out.append(rec)
        return {"cells": out}

    @classmethod
    def from_json(cls, data):
        recs = sorted(data["cells"], key=lambda r: r["id"])
        cells = []
        for k, r in enumerate(recs):
            if r["id"] != k:
                raise ChainError("cell ids must be 0..N-1")
            cells.append(Cell(r["dim"], [tuple(b) for b in r["boundary"]],
                              Fraction(r["weight"]), Fraction(r["scale"]),
                              None if "coords" not in r else [Fraction(x) for x in r["coords"]],
                              r.get("label")))
        return cls(cells)


class Chain:
    """Sparse formal sum of cells of one dimension."""

    __slots__ = ("dim", "coefs", "host")

    def __init__(self, dim, coefs, host):
        self.dim = dim
        self.host = host
        self.coefs = {int(i): frac(v) for i, v in coefs.items() if v != 0}

    @classmethod
    def _raw(cls, dim, coefs, host):
        c = cls.__new__(cls)
        c.dim, c.coefs, c.host = dim, coefs, host
        return c

    def check(self):
        for i in self.coefs:
            if self.host.cells[i].dim != self.dim:
                raise ChainError(f"cell {i} has wrong dimension for a {self.dim}-chain")
        return self

    def _same(self, other):
        if other.host is not self.host or other.dim != self.dim:
            raise ChainError("chains live on different complexes or dimensions")

    def __add__(self, other):
        self._same(other)
        out = dict(self.coefs)
        for i, v in other.coefs.items():
            w = out.get(i, 0) + v
            if w:
                out[i] = w
            else:
                out.pop(i, None)
        return Chain._raw(self.dim, out, self.host)

    def __neg__(self):
        return Chain._raw(self.dim, {i: -v for i, v in self.coefs.items()}, self.host)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, k):
        k = frac(k)
        if k == 0:
            return Chain._raw(self.dim, {}, self.host)
        return Chain._raw(self.dim, {i: k * v for i, v in self.coefs.items()}, self.host)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, Chain) and self.host is other.host
                and self.dim == other.dim and self.coefs == other.coefs)

    def __bool__(self):
        return bool(self.coefs)

    def __repr__(self):
        return f"Chain(dim={self.dim}, n={len(self.coefs)})"

    def is_zero(self):
        return not self.coefs

    def to_json(self):
        return {"dim": self.dim, "coefs": {str(i): str(v) for i, v in sorted(self.coefs.items())}}

    @classmethod
    def from_json(cls, data, host):
        return cls(data["dim"], {int(k): Fraction(v) for k, v in data["coefs"].items()}, host).check()


def boundary(c: Chain, augment=False) -> Chain:
    if c.dim < 0:
        raise DomainError("no boundary below dimension 0")
    if c.dim == 0:
        if not augment:
            raise DomainError("boundary of a 0-chain needs augment=True")
        return Chain._raw(-1, {}, c.host)
    out = {}
    cells = c.host.cells
    for i, v in c.coefs.items():
        for j, s in cells[i].boundary:
            w = out.get(j, 0) + s * v
            if w:
                out[j] = w
            else:
                del out[j]
    return Chain._raw(c.dim - 1, out, c.host)


def augmentation(c: Chain) -> Fraction:
    if c.dim != 0:
        raise DomainError("augmentation is defined on 0-chains")
    return sum(c.coefs.values(), Fraction(0))


def is_cycle(c: Chain) -> bool:
    if c.dim == 0:
        return augmentation(c) == 0
    return boundary(c).is_zero()


def mass(c: Chain) -> Fraction:
    cells = c.host.cells
    return sum((abs(v) * cells[i].weight for i, v in c.coefs.items()), Fraction(0))


# ---------------------------------------------------------------- geometry

def _det(rows):
    m = [list(r) for r in rows]
    n = len(m)
    d = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            d = -d
        p = m[col][col]
        d *= p
        for r in range(col + 1, n):
            f = m[r][col] / p
            if f:
                for k in range(col, n):
                    m[r][k] -= f * m[col][k]
    return d


def simplex_volume(points):
    """Projected volume of a simplex: the largest |det|/k! over coordinate
    k-planes.  On a fixed affine plane this is a constant multiple of the
    euclidean volume, so it is additive under subdivision and stays rational."""
    k = len(points) - 1
    if k == 0:
        return Fraction(1)
    p0 = points[0]
    vecs = [[a - b for a, b in zip(p, p0)] for p in points[1:]]
    m = len(p0)
    best = Fraction(0)
    for J in itertools.combinations(range(m), k):
        d = abs(_det([[v[j] for j in J] for v in vecs]))
        if d > best:
            best = d
    return best / factorial(k)


def _sort_sign(seq):
    """Sort a vertex tuple, returning (sorted tuple, permutation sign) or
    (None, 0) if it has repeats."""
    if len(set(seq)) < len(seq):
        return None, 0
    s = list(seq)
    sign = 1
    for i in range(len(s)):
        for j in range(len(s) - 1 - i):
            if s[j] > s[j + 1]:
                s[j], s[j + 1] = s[j + 1], s[j]
                sign = -sign
    return tuple(s), sign


class Refinement:
    """A subdivision of `coarse` into the simplicial complex `fine`.

    refine() is the subdivision chain map; coarsen() is its left inverse on
    the image.  vertex_carrier maps each fine vertex to the coarse cell whose
    barycenter it is (original vertices carry themselves)."""

    def __init__(self, coarse, fine, pieces, vertex_carrier, cell_carrier, kind):
        self.coarse = coarse
        self.fine = fine
        self.pieces = pieces
        self.vertex_carrier = vertex_carrier
        self.cell_carrier = cell_carrier
        self.kind = kind
        self.simplex_index = {}
        for i, c in enumerate(fine.cells):
            self.simplex_index[tuple(sorted(fine.vertices(i)))] = i
        fine.origin = self

    def __iter__(self):
        # allows `fine, ref = triangulate(cx)`
        yield self.fine
        yield self

    def refine(self, c: Chain) -> Chain:
        if c.host is not self.coarse:
            raise CarrierMismatch("chain is not on the coarse complex")
        out = {}
        for i, v in c.coefs.items():
            for j, s in self.pieces[i].items():
                w = out.get(j, 0) + s * v
                if w:
                    out[j] = w
                else:
                    del out[j]
        return Chain._raw(c.dim, out, self.fine)

    def coarsen(self, c: Chain) -> Chain:
        """Push a fine chain onto its carriers.  Pieces add up, so
        coarsen(refine(c)) is c scaled by the number of pieces per cell."""
        if c.host is not self.fine:
            raise CarrierMismatch("chain is not on the fine complex")
        out = {}
        for j, v in c.coefs.items():
            car = self.cell_carrier[j]
            if self.coarse.cells[car].dim != c.dim:
                continue
            s = self.pieces[car][j]
            out[car] = out.get(car, 0) + s * v
        return Chain(c.dim, out, self.coarse)


def _subdivide(cx: CellComplex, everything: bool, kind: str, skeleton=None,
               cells=None) -> Refinement:
    allowed = None if cells is None else set(cells) | set(cx.cells_of_dim(0))
    geometric = all(cx.cells[v].coords is not None for v in cx.cells_of_dim(0))
    if kind == "triangulate" and not geometric:
        raise GeometryError("triangulate needs coordinates on every vertex")
    if kind == "barycentric":
        bad = [i for i in range(len(cx)) if not cx.is_simplex(i)]
        if bad:
            raise ChainError(f"barycentric_subdivide needs a simplicial complex (cell {bad[0]})")

    # fine vertices: originals first, then barycenters in cell order
    fverts = []
    vcarrier = []
    old_to_new = {}
    for v in cx.cells_of_dim(0):
        old_to_new[v] = len(fverts)
        fverts.append(cx.cells[v].coords)
        vcarrier.append(v)
    bary = {}
    order = sorted(range(len(cx)), key=lambda i: (cx.cells[i].dim, i))
    for i in order:
        c = cx.cells[i]
        if c.dim == 0 or (not everything and cx.is_simplex(i)):
            continue
        if allowed is not None and i not in allowed:
            continue
        bary[i] = len(fverts)
        if geometric:
            vs = cx.vertices(i)
            pts = [cx.cells[v].coords for v in vs]
            fverts.append(tuple(sum(col, Fraction(0)) / len(pts) for col in zip(*pts)))
        else:
            fverts.append(None)
        vcarrier.append(i)

    # refinement of each coarse cell as {sorted tuple: sign}
    ref = {}
    top = cx.dim if skeleton is None else skeleton
    for i in order:
        c = cx.cells[i]
        if c.dim > top or (allowed is not None and i not in allowed):
            continue
        if c.dim == 0:
            ref[i] = {(old_to_new[i],): 1}
            continue
        if i not in bary:
            tup = tuple(sorted(old_to_new[v] for v in cx.vertices(i)))
            # fix the sign by matching the first face of the canonical simplex
            face0 = tup[1:]
            want = 0
            for j, s in c.boundary:
                r = ref[j]
                if face0 in r:
                    want = s * r[face0]
                    break
            if want == 0:
                raise ChainError(f"cell {i}: simplex faces inconsistent")
            ref[i] = {tup: want}
            continue
        b = bary[i]
        acc = {}
        for j, s in c.boundary:
            for tau, t in ref[j].items():
                st, sg = _sort_sign((b,) + tau)
                w = acc.get(st, 0) + s * t * sg
                if w:
                    acc[st] = w
                else:
                    del acc[st]
        ref[i] = acc

    if kind == "barycentric":
        # fine simplices are flags of cells, listed bottom-up
        simplices = set()
        flags = {}
        for i in order:
            if allowed is not None and i not in allowed:
                continue
            mine = [(bary.get(i, old_to_new.get(i)),)]
            below = set()
            stack = [j for j, _ in cx.cells[i].boundary]
            while stack:
                j = stack.pop()
                if j not in below:
                    below.add(j)
                    stack.extend(f for f, _ in cx.cells[j].boundary)
            for j in below:
                for fl in flags.get(j, ()):
                    if len(fl) <= top:
                        mine.append(fl + mine[0])
            flags[i] = mine
            simplices.update(mine)
    else:
        simplices = set()
        for i in order:
            for tau in ref[i]:
                for k in range(1, len(tau) + 1):
                    simplices.update(itertools.combinations(tau, k))
    simplices = sorted(simplices, key=lambda t: (len(t), t))
    index = {t: n for n, t in enumerate(simplices)}

    # carrier of each fine simplex: the smallest coarse cell containing it
    def carrier(t):
        cars = [vcarrier[v] for v in t]
        top = max(cars, key=lambda j: (cx.cells[j].dim, j))
        if cx.cells[top].dim > 0:
            return top
        return _cell_by_vertices(cx, frozenset(cars))

    fine_cells = []
    ccar = []
    for t in simplices:
        k = len(t) - 1
        car = carrier(t)
        cc = cx.cells[car]
        bnd = [] if k == 0 else [(index[t[:m] + t[m + 1:]], (-1) ** m) for m in range(k + 1)]
        if geometric:
            w = simplex_volume([fverts[v] for v in t])
        elif cc.dim == k:
            w = cc.weight / len(ref[car])
        else:
            w = (cc.scale / 2) ** k / factorial(k)
        scale = cc.scale if kind == "triangulate" else cc.scale / 2
        fine_cells.append(Cell(k, bnd, w, scale, fverts[t[0]] if k == 0 else None))
        ccar.append(car)
    fine = CellComplex(fine_cells, check=False)
    pieces = {i: {index[t]: s for t, s in ref[i].items()} for i in ref}
    return Refinement(cx, fine, pieces, vcarrier, ccar, kind)


def _cell_by_vertices(cx, vs):
    cache = getattr(cx, "_vset_index", None)
    if cache is None:
        cache = {cx.vertices(i): i for i in range(len(cx))}
        cx._vset_index = cache
    try:
        return cache[vs]
    except KeyError:
        raise ChainError("subdivision produced a simplex with no coarse carrier") from None


def triangulate(cx: CellComplex) -> Refinement:
    """Stellar subdivision of every non-simplex cell from its barycenter,
    lowest dimension first.  Simplices are kept as they are."""
    return _subdivide(cx, False, "triangulate")


def barycentric_subdivide(cx: CellComplex, skeleton=None, cells=None) -> Refinement:
    """Barycentric subdivision; with `skeleton=m` only flags of at most m+1
    cells are built (enough for deforming chains of dimension < m).  With
    `cells`, only flags made of those cells (and vertices) are kept."""
    return _subdivide(cx, True, "barycentric", skeleton, cells)


def simplex_orientation(cx: CellComplex):
    """Sign of each simplex cell relative to the increasing-vertex orientation."""
    out = {}
    for i in sorted(range(len(cx)), key=lambda i: cx.cells[i].dim):
        c = cx.cells[i]
        if c.dim == 0:
            out[i] = 1
            continue
        tup = tuple(sorted(cx.vertices(i)))
        face0 = frozenset(tup[1:])
        for j, s in c.boundary:
            if cx.vertices(j) == face0:
                out[i] = s * out[j]
                break
        else:
            raise ChainError(f"cell {i} is not a simplex")
    return out


class DeformationResult:
    __slots__ = ("p_chain", "q_chain", "mass_ratio_p", "mass_ratio_q")

    def __init__(self, p_chain, q_chain, mass_ratio_p, mass_ratio_q):
        self.p_chain = p_chain
        self.q_chain = q_chain
        self.mass_ratio_p = mass_ratio_p
        self.mass_ratio_q = mass_ratio_q

    def __repr__(self):
        return f"DeformationResult(ratio_p={self.mass_ratio_p}, ratio_q={self.mass_ratio_q})"


class _Deformer:
    """Last-vertex carrier map Sd(S) -> S and its cone homotopy."""

    def __init__(self, sd: Refinement):
        self.sd = sd
        cx = sd.coarse
        self.last = {i: max(cx.vertices(i)) for i in range(len(cx))}
        self.orient = simplex_orientation(cx)
        self.by_verts = {cx.vertices(i): i for i in range(len(cx))}
        self.bary = {car: v for v, car in enumerate(sd.vertex_carrier)}
        self.qcache = {}
        fine = sd.fine
        self.fverts = [tuple(sorted(fine.vertices(i))) for i in range(len(fine))]

    def p_simplex(self, j):
        """Image of fine simplex j as {coarse cell: sign}."""
        sd = self.sd
        img = tuple(self.last[sd.vertex_carrier[v]] for v in self.fverts[j])
        st, sg = _sort_sign(img)
        if st is None:
            return {}
        c = self.by_verts[frozenset(st)]
        return {c: sg * self.orient[c]}

    def p_chain(self, a):
        out = {}
        for j, v in a.coefs.items():
            for c, s in self.p_simplex(j).items():
                w = out.get(c, 0) + s * v
                if w:
                    out[c] = w
                else:
                    del out[c]
        return Chain._raw(a.dim, out, self.sd.coarse)

    def q_simplex(self, j):
        got = self.qcache.get(j)
        if got is not None:
            return got
        sd = self.sd
        fine = sd.fine
        car = sd.cell_carrier[j]
        if sd.coarse.cells[car].dim == 0:
            self.qcache[j] = {}
            return {}
        b = self.bary[car]
        z = {j: Fraction(1)}

        def add(k, v):
            w = z.get(k, 0) + v
            if w:
                z[k] = w
            else:
                z.pop(k, None)

        for c, s in self.p_simplex(j).items():
            for k, t in sd.pieces[c].items():
                add(k, -s * t)
        for k, s in fine.cells[j].boundary:
            for m, t in self.q_simplex(k).items():
                add(m, -s * t)
        out = {}
        for k, v in z.items():
            verts = self.fverts[k]
            if b in verts:
                continue
            st, sg = _sort_sign((b,) + verts)
            m = sd.simplex_index[st]
            w = out.get(m, 0) + sg * v
            if w:
                out[m] = w
            else:
                del out[m]
        self.qcache[j] = out
        return out

    def q_chain(self, a):
        out = {}
        for j, v in a.coefs.items():
            for m, t in self.q_simplex(j).items():
                w = out.get(m, 0) + t * v
                if w:
                    out[m] = w
                else:
                    del out[m]
        return Chain._raw(a.dim + 1, out, self.sd.fine)


def deformer(sd: Refinement) -> _Deformer:
    d = getattr(sd, "_deformer", None)
    if d is None:
        d = _Deformer(sd)
        sd._deformer = d
    return d


def ff_deform(a: Chain) -> DeformationResult:
    """Cellular approximation P(a) on the coarse complex plus the homotopy
    chain Q(a) on the subdivision, with dQ = a - Sd(P(a))."""
    sd = getattr(a.host, "origin", None)
    if sd is None or sd.kind != "barycentric":
        raise CarrierMismatch("chain is not hosted on a barycentric subdivision")
    d = deformer(sd)
    p = d.p_chain(a)
    q = d.q_chain(a)
    m = mass(a)
    if m == 0:
        return DeformationResult(p, q, Fraction(0), Fraction(0))
    return DeformationResult(p, q, mass(p) / m, mass(q) / m)
