"""Square loops in the plane need area L^2 to fill."""
from horofill.chains import Chain, boundary, mass
from horofill.filling import fit_exponent, min_fill_lp
from horofill.spaces import build_grid

cx = build_grid(6, 2)
pts = []
for L in range(2, 7):
    block = [i for i in cx.cells_of_dim(2)
             if all(max(cx.cells[v].coords[j] for v in cx.vertices(i)) <= L for j in (0, 1))]
    loop = boundary(Chain(2, {i: 1 for i in block}, cx))
    r = min_fill_lp(cx, loop)
    pts.append((mass(loop), r.mass))
    print(f"L={L}: perimeter {mass(loop)}, filling area {r.mass}")
fit = fit_exponent(pts)
print(f"area ~ perimeter^{fit.exponent:.3f} (R^2 {fit.r_squared:.4f})")
