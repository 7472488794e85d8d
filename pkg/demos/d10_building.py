"""Downward links, opposite chambers and projections in a product of two trees."""
from horofill.building import (VerticalGeodesic, downward_link, is_characteristic,
                               opposite_witness, project_to_geodesic)
from horofill.spaces import build_tree, build_tree_product

sp = build_tree_product([build_tree(2, 4)] * 2, [1, 1], 4)
t = sp.factors[0]
x = (t.index["0"], t.index["10"])
link = downward_link(sp, x)
print(f"base {['0', '10']}: {len(link)} chambers in the downward link")
print("all characteristic:", all(is_characteristic(sp, x, c) for c in link.chambers()))
w = opposite_witness(sp, x)
print(f"witness x' = {w['x_prime']}, d = {w['d']}, checked {w['checked']}, failures {len(w['failures'])}")
g = VerticalGeodesic(t, t.index["0000"])
v = t.index["11"]
print("projection of '11' onto the geodesic to '0000':", t.words[project_to_geodesic(g, v)])
