"""Cellular deformation: a cycle on a fine subdivision is pushed to
the coarse complex, and the homotopy chain Q accounts for the difference."""
from horofill.chains import barycentric_subdivide, boundary, ff_deform, mass, triangulate
from horofill.spaces import build_grid, random_cycle

base = triangulate(build_grid(2, 2)).fine
sd1 = barycentric_subdivide(base)
sd2 = barycentric_subdivide(sd1.fine)

for label, sd in (("level 1", sd1), ("level 2", sd2)):
    worst = 0
    for seed in range(40):
        a = random_cycle(sd.fine, 1, 8, seed)
        if a.is_zero():
            continue
        d = ff_deform(a)
        assert boundary(d.q_chain) == a - sd.refine(d.p_chain)
        worst = max(worst, d.mass_ratio_p)
    print(f"{label}: dQ = a - P a on all samples, max mass(P a)/mass(a) = {worst}")
