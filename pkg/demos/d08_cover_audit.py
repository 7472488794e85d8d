"""Build a cover of a grid relative to one of its sides and audit it."""
from fractions import Fraction

from horofill.extension import audit_cover, grid_space, lipschitz_g, ls_cover, nerve

X, cx = grid_space(16, 2)
Z = [v for v in cx.cells_of_dim(0) if cx.cells[v].coords[0] == 0]
cov = ls_cover(X, Z, Fraction(3, 2))
print(f"{len(cov)} elements, {cov.kind.count('far')} far from the side")
for name, v in audit_cover(cov).items():
    if isinstance(v, dict):
        print(f"  {name:12s} ok={v['ok']}  measured={v.get('measured')}  declared={v.get('declared')}")
nv = nerve(cov)
lip, bound = lipschitz_g(cov, nv)
print(f"nerve dim {nv.dim}; Lip(g) = {lip} <= {bound}")
