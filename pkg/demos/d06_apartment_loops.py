"""Loops on the three-tree horosphere fill quadratically."""
from horofill.chains import mass
from horofill.filling import fit_exponent, min_fill_lp
from horofill.spaces import apartment_loops, build_tree, build_tree_product, horosphere

sp = build_tree_product([build_tree(2, 4)] * 3, [1, 1, 1], 4)
Z = horosphere(sp, 0, triangulated=False)
pts = []
for name, loop, patch in apartment_loops(sp, Z):
    r = min_fill_lp(Z.complex, loop)
    pts.append((mass(loop), r.mass))
    print(f"{name:10s} length {str(mass(loop)):>3s}  fill {r.mass}  (patch {mass(patch)})")
fit = fit_exponent(pts)
print(f"fill ~ length^{fit.exponent:.3f}, R^2 {fit.r_squared:.3f}")
