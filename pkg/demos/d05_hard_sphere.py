"""Loops pushed r levels above the two-tree horosphere.

In the product of two trees the loop fills cheaply in the ambient space, but
not inside the band |h| <= r around the level set.  The level set itself is
a graph, so there is no filling there at all."""
from horofill.chains import mass
from horofill.filling import min_fill_lp
from horofill.spaces import CapacityError, build_tree, build_tree_product, hard_sphere, horosphere


def smallest_space(r):
    for D in range(r + 1, 10):
        for C0 in range(r + 1, 2 * D + 1):
            sp = build_tree_product([build_tree(2, D)] * 2, [1, 1], C0)
            Z = horosphere(sp, 0, triangulated=False)
            try:
                return sp, Z, hard_sphere(sp, r, Z)[0]
            except CapacityError:
                continue


for r in (1, 2, 3):
    sp, Z, a = smallest_space(r)
    ha = Z.to_host(a)
    fx = min_fill_lp(sp.complex, ha)
    fz = min_fill_lp(Z.complex, a)
    first = None
    for w in range(r + 2):
        keep = {i for i in range(len(sp.complex))
                if max(abs(sp.h[v]) for v in sp.complex.vertices(i)) <= w}
        if min_fill_lp(sp.complex, ha, restrict=keep).lp_status == "optimal":
            first = w
            break
    print(f"r={r} (depth {sp.factors[0].D}): loop mass {mass(a)}, fill in X {fx.mass}, "
          f"fill in Z: {fz.lp_status}, first band that fills: |h| <= {first}")
