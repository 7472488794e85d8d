"""Fill a pair of horosphere points through the cover-and-nerve pipeline and
compare with the ambient geodesic."""
import random
from fractions import Fraction

from horofill.chains import Chain, boundary, mass
from horofill.cli import _geodesic
from horofill.extension import Pipeline, undistorted_fill
from horofill.spaces import build_tree, build_tree_product, horosphere

sp = build_tree_product([build_tree(2, 4)] * 2, [1, 1], 4)
Z = horosphere(sp, 0, triangulated=False)
pl = Pipeline(sp, Z)
print(f"cover: {len(pl.cover)} elements, nerve dim {pl.nerve.dim}")
rng = random.Random(0)
zv = sorted(Z.complex.cells_of_dim(0))
worst = Fraction(0)
for _ in range(10):
    u, w = rng.sample(zv, 2)
    alpha = Chain(0, {u: 1, w: -1}, Z.complex)
    beta = _geodesic(sp, Z.host_cell[w], Z.host_cell[u])
    res = undistorted_fill(sp, Z, alpha, beta, pl)
    assert boundary(res.filling) == alpha
    worst = max(worst, res.mass / (mass(beta) + 1))
    print(f"d_X {mass(beta)}  path in Z {res.mass}")
print("measured constant C =", worst)
