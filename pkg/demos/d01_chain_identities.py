"""Boundary of a boundary vanishes, and subdividing commutes with taking boundaries.

Run: python3 demos/d01_chain_identities.py
"""
from horofill.chains import barycentric_subdivide, boundary, triangulate
from horofill.spaces import build_grid, build_tree, build_tree_product, horosphere

grid = build_grid(2, 3)
print("grid(2,3) cells by dim:", [grid.count(i) for i in range(4)])
cube = grid.cell_chain(grid.cells_of_dim(3)[0])
print("dd(cube) is zero:", boundary(boundary(cube)).is_zero())

tri = triangulate(grid)
sd = barycentric_subdivide(tri.fine)
c = tri.refine(grid.cell_chain(grid.cells_of_dim(2)[0]))
print("triangulated square ->", len(c.coefs), "triangles;",
      "barycentric ->", len(sd.refine(c).coefs))
print("d(Sd c) == Sd(d c):", boundary(sd.refine(c)) == sd.refine(boundary(c)))

sp = build_tree_product([build_tree(2, 3)] * 3, [1, 1, 1], 4)
Z = horosphere(sp, 0)
ok = all(boundary(Z.to_host(Z.complex.cell_chain(i))) == Z.to_host(boundary(Z.complex.cell_chain(i)))
         for i in range(len(Z.complex)) if Z.complex.cells[i].dim > 0)
print("horosphere (n=3, depth 3) cells:", [Z.complex.count(i) for i in range(3)])
print("pushing into the host commutes with d:", ok)
