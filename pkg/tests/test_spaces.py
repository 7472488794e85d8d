from fractions import Fraction

import pytest

from horofill.chains import boundary, mass
from horofill.spaces import (CapacityError, EmptyLevelError, apartment_loops, brute_force_slice,
                             build_grid, build_tree, build_tree_product, hard_sphere, horosphere,
                             oriented_patch, random_cycle, space_from_config)


def product(n, D, C0=None, slope=None):
    return build_tree_product([build_tree(2, D)] * n, slope or [1] * n, D if C0 is None else C0)


def test_grid_counts():
    assert [build_grid(2, 3).count(i) for i in range(4)] == [27, 54, 36, 8]
    assert [build_grid(3, 2).count(i) for i in range(3)] == [16, 24, 9]


def test_grid_cap():
    with pytest.raises(CapacityError):
        build_grid(50, 3, cap=1000)


def test_tree_words_and_metric():
    t = build_tree(2, 3)
    assert len(t) == 15 and len(t.leaves) == 8
    a, b = t.index["000"], t.index["011"]
    assert t.words[t.meet(a, b)] == "0"
    assert t.dist(a, b) == 4


def test_tree_product_heights():
    sp = product(2, 2, C0=2)
    assert sp.complex.count(0) == 49
    assert min(sp.h.values()) == -2 and max(sp.h.values()) == 2
    sp2 = product(2, 2, C0=2, slope=[1, 2])
    leaf = sp2.factors[0].leaves[0]
    assert sp2.h_of((leaf, leaf)) == -4


def test_horosphere_counts_two_factors():
    sp = product(2, 4, C0=4)
    Z0 = horosphere(sp, 0)
    Zh = horosphere(sp, Fraction(1, 2))
    assert [Z0.complex.count(i) for i in range(2)] == [80, 128]
    assert [Zh.complex.count(i) for i in range(2)] == [128, 176]
    assert len(Z0.congruence_classes()) == 2


def test_horosphere_three_factors_chain_map():
    sp = product(3, 3, C0=4)
    Z = horosphere(sp, 0)
    assert [Z.complex.count(i) for i in range(3)] == [192, 768, 640]
    assert len(Z.congruence_classes()) == 6
    for i in range(len(Z.complex)):
        c = Z.complex.cell_chain(i)
        if c.dim >= 1:
            assert boundary(Z.to_host(c)) == Z.to_host(boundary(c))


def test_horosphere_matches_brute_force_slice():
    sp = product(2, 3, C0=3)
    Z = horosphere(sp, 0, triangulated=False)
    pts, dims = brute_force_slice(sp, 0)
    verts = {("v", h) if sp.complex.cells[h].dim == 0 else ("e", h)
             for i, h in enumerate(Z.host_cell) if Z.complex.cells[i].dim == 0}
    assert pts == verts
    crossing = {h: Z.complex.cells[i].dim for i, h in enumerate(Z.host_cell)
                if sp.complex.cells[h].dim > 0}
    assert crossing == dims


def test_empty_level():
    with pytest.raises(EmptyLevelError):
        horosphere(product(2, 2, C0=2), 10)


def test_hard_sphere_masses_and_depth_message():
    sp = product(2, 4, C0=4)
    Z = horosphere(sp, 0, triangulated=False)
    a0, _ = hard_sphere(sp, 0, Z)
    a1, info = hard_sphere(sp, 1, Z)
    assert (mass(a0), mass(a1)) == (4, 8)
    assert boundary(a1).is_zero()
    with pytest.raises(CapacityError, match="depth >= 5"):
        hard_sphere(sp, 2, Z)


def test_random_cycle_is_deterministic_cycle():
    Z = horosphere(product(3, 3, C0=4), 0, triangulated=False)
    a = random_cycle(Z, 1, 12, seed=5)
    b = random_cycle(Z, 1, 12, seed=5)
    assert a == b and not a.is_zero()
    assert boundary(a).is_zero() and mass(a) <= 12
    assert random_cycle(Z, 1, 0, seed=5).is_zero()


def test_apartment_loops_on_octahedron():
    sp = product(3, 4, C0=4)
    Z = horosphere(sp, 0, triangulated=False)
    loops = apartment_loops(sp, Z)
    assert len(loops) == 16
    masses = sorted(mass(l) for _, l, _ in loops)
    assert masses[0] == 3 and masses[-1] == 16
    for _, loop, patch in loops:
        assert boundary(patch) == loop


def test_oriented_patch_rejects_empty():
    Z = horosphere(product(3, 2, C0=2), 0, triangulated=False)
    with pytest.raises(Exception):
        oriented_patch(Z, [])


def test_space_from_config_rejects_unknown():
    with pytest.raises(ValueError):
        space_from_config({"factors": 2, "colour": 1})
    sp = space_from_config({"factors": 2, "depth": 2})
    assert sp.n == 2 and sp.C0 == 2
