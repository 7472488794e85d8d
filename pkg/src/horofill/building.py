"""Chambers at infinity, downward links and projections in tree products."""
from __future__ import annotations

import itertools
import random
import warnings
from collections import namedtuple
from fractions import Fraction

from .spaces import CapacityError

XI = "xi"   # the distinguished upward end of a factor

RayEnd = namedtuple("RayEnd", "vertex remainder steps")


def chamber_to_json(space, c):
    return [XI if e == XI else space.factors[i].words[e] for i, e in enumerate(c)]


def chamber_from_json(space, arr):
    return tuple(XI if e == XI else space.factors[i].index[e] for i, e in enumerate(arr))


def top_chamber(space):
    return (XI,) * space.n


def is_opposite(c1, c2):
    return all(a != b for a, b in zip(c1, c2))


def retraction_rho(space, x):
    return space.levels(x)


def _below(tree, leaf, v):
    return leaf != v and tree.is_below(leaf, v)


def direction(space, C, c):
    """'down' in factor i iff the end c_i lies strictly below C_i.

    C is a vertex tuple, or an int naming a cell of the product complex; for
    a cell the lower endpoint of each edge factor is used."""
    if isinstance(C, int):
        key = space.keys[C]
        C = []
        for f, it in enumerate(key):
            nv = len(space.factors[f])
            C.append(it if it < nv else it - nv + 1)
        C = tuple(C)
    out = []
    for t, v, e in zip(space.factors, C, c):
        if e == XI:
            out.append("up")
        elif e == v and t.level[v] == t.D:
            raise CapacityError("end sits on a bottom leaf; no room to descend")
        else:
            out.append("down" if _below(t, e, v) else "up")
    return tuple(out)


def is_characteristic(space, C, c):
    try:
        return all(d == "down" for d in direction(space, C, c))
    except CapacityError:
        return False


class DownwardLink:
    def __init__(self, space, x):
        self.space = space
        self.base = tuple(x)
        self.ends = [tuple(l for l in t.leaves_below(v) if l != v)
                     for t, v in zip(space.factors, x)]
        self.empty_factors = [i for i, e in enumerate(self.ends) if not e]

    def __contains__(self, c):
        return all(e != XI and e in s for e, s in zip(c, self.ends))

    def __len__(self):
        n = 1
        for e in self.ends:
            n *= len(e)
        return n

    @property
    def empty(self):
        return bool(self.empty_factors)

    def chambers(self):
        return itertools.product(*self.ends)

    def sample(self, k, seed):
        rng = random.Random(seed)
        if self.empty:
            return []
        return [tuple(rng.choice(e) for e in self.ends) for _ in range(k)]

    def issubset(self, other):
        return all(set(a) <= set(b) for a, b in zip(self.ends, other.ends))


def downward_link(space, x) -> DownwardLink:
    x = tuple(x)
    if space.h_of(x) < 0:
        warnings.warn("downward link requested below the level set", stacklevel=2)
    return DownwardLink(space, x)


def ray_to_horosphere(space, x, c, t=0):
    """Walk diagonally from x toward c, one step down in every factor per
    tick, until the height reaches t."""
    x = tuple(x)
    drop = sum(space.slope)
    excess = space.h_of(x) - t
    if excess < 0:
        raise ValueError("start point is below the level")
    steps, rem = divmod(excess, drop)
    cur = x
    for _ in range(steps):
        nxt = []
        for tr, v, e in zip(space.factors, cur, c):
            if e == XI or not _below(tr, e, v):
                raise CapacityError("ray direction is not below the current point")
            nxt.append(tr.descend(v, e, 1))
        cur = tuple(nxt)
    return RayEnd(cur, Fraction(rem, drop), steps)


def opposite_witness(space, x, sample=None, seed=0):
    """Witness chamber d for x: each d_i is a leaf under a sibling of x_i."""
    x = tuple(x)
    xp = []
    d = []
    for t, v in zip(space.factors, x):
        p = t.parent[v]
        if p is None:
            raise CapacityError("base point has a root coordinate; no parent")
        sib = [u for u in t.children[p] if u != v]
        leaves = t.leaves_below(sib[0]) if sib else []
        if not leaves:
            raise CapacityError("sibling subtree is truncated")
        xp.append(p)
        d.append(leaves[0])
    xp, d = tuple(xp), tuple(d)
    link = downward_link(space, x)
    up_link = downward_link(space, xp)
    chambers = link.chambers() if sample is None else link.sample(sample, seed)
    checked = 0
    failures = []
    for c in chambers:
        checked += 1
        if not is_opposite(c, d):
            failures.append({"chamber": chamber_to_json(space, c), "why": "not opposite"})
            continue
        for pick in itertools.product((0, 1), repeat=space.n):
            e = tuple(c[i] if b == 0 else d[i] for i, b in enumerate(pick))
            if e not in up_link:
                failures.append({"chamber": chamber_to_json(space, c), "why": "apartment leaves dlk(x')"})
                break
    dist2 = sum(t.dist(a, b) ** 2 for t, a, b in zip(space.factors, x, xp))
    if dist2 != space.n:
        failures.append({"why": f"d(x,x')^2 = {dist2}"})
    fw = lambda tup: [t.words[v] for t, v in zip(space.factors, tup)]
    return {"x": fw(x), "x_prime": fw(xp), "d": chamber_to_json(space, d),
            "checked": checked, "failures": failures, "dist_sq": dist2}


class VerticalGeodesic:
    """Path from a leaf up to the root of one factor."""

    def __init__(self, tree, leaf, factor=0):
        self.tree = tree
        self.factor = factor
        self.end = leaf
        path = [leaf]
        while tree.parent[path[-1]] is not None:
            path.append(tree.parent[path[-1]])
        self.by_level = {tree.level[v]: v for v in path}
        self.vertices = frozenset(path)

    def __contains__(self, v):
        return v in self.vertices


def project_to_geodesic(gamma: VerticalGeodesic, v):
    lvl = gamma.tree.level[v]
    if lvl not in gamma.by_level:
        raise CapacityError("level outside the geodesic")
    return gamma.by_level[lvl]


def dist_to_geodesic(gamma, v):
    t = gamma.tree
    return min(t.dist(v, u) for u in gamma.vertices)


def slice_project(space, i, gamma, v):
    v = tuple(v)
    return v[:i] + (project_to_geodesic(gamma, v[i]),) + v[i + 1:]
