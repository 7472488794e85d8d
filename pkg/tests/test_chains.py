from fractions import Fraction

import pytest

from horofill.chains import (Cell, CellComplex, Chain, ChainError, DomainError, GeometryError,
                             CarrierMismatch, augmentation, barycentric_subdivide, boundary,
                             ff_deform, is_cycle, mass, simplex_volume, triangulate)
from horofill.spaces import build_grid, random_cycle


def triangle():
    # vertices 0,1,2; edges 3=[0,1] 4=[0,2] 5=[1,2]; face 6=[0,1,2]
    cells = [Cell(0, coords=(0, 0)), Cell(0, coords=(1, 0)), Cell(0, coords=(0, 1)),
             Cell(1, [(1, 1), (0, -1)]), Cell(1, [(2, 1), (0, -1)]), Cell(1, [(2, 1), (1, -1)]),
             Cell(2, [(5, 1), (4, -1), (3, 1)])]
    return CellComplex(cells)


def test_boundary_of_boundary_on_triangle():
    cx = triangle()
    face = cx.cell_chain(6)
    assert boundary(boundary(face)).is_zero()
    assert boundary(face).coefs == {3: 1, 4: -1, 5: 1}


def test_zero_chain_boundary_needs_augment():
    cx = triangle()
    v = cx.cell_chain(0)
    with pytest.raises(DomainError):
        boundary(v)
    assert boundary(v, augment=True).dim == -1
    assert augmentation(Chain(0, {0: 1, 1: -1}, cx)) == 0


def test_bad_cells_rejected():
    with pytest.raises(ChainError):
        CellComplex([Cell(0), Cell(1, [(0, 2)])])
    with pytest.raises(ChainError):
        CellComplex([Cell(0, weight=0)])
    with pytest.raises(ChainError):
        CellComplex([Cell(1, [(5, 1)])])


def test_chain_arithmetic_and_mixing():
    cx = triangle()
    a = Chain(1, {3: 1, 4: Fraction(1, 2)}, cx)
    b = Chain(1, {3: -1}, cx)
    assert (a + b).coefs == {4: Fraction(1, 2)}
    assert (2 * a - a) == a
    assert mass(a) == Fraction(3, 2)
    with pytest.raises(ChainError):
        a + cx.cell_chain(0)
    with pytest.raises(ChainError):
        Chain(1, {0: 1}, cx).check()


def test_json_round_trip():
    cx = triangle()
    back = CellComplex.from_json(cx.to_json())
    assert [c.boundary for c in back.cells] == [c.boundary for c in cx.cells]
    a = Chain(1, {3: Fraction(2, 3)}, cx)
    assert Chain.from_json(a.to_json(), cx) == a


def test_cycle_detection():
    cx = triangle()
    assert is_cycle(boundary(cx.cell_chain(6)))
    assert not is_cycle(cx.cell_chain(3))


def test_projected_volume():
    assert simplex_volume([(0, 0), (1, 0), (0, 1)]) == Fraction(1, 2)
    assert simplex_volume([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]) == Fraction(1, 6)
    # a slanted unit segment keeps the larger coordinate projection
    assert simplex_volume([(0, 0), (1, 1)]) == 1


def test_triangulate_grid_counts_and_mass():
    cx = build_grid(4, 2)
    ref = triangulate(cx)
    assert len(ref.fine) == 209
    sq = cx.cell_chain(cx.cells_of_dim(2)[0])
    assert mass(ref.refine(sq)) == mass(sq) == 1
    assert ref.coarsen(ref.refine(sq)) == 4 * sq


def test_triangulate_needs_coordinates():
    cx = CellComplex([Cell(0), Cell(0), Cell(1, [(1, 1), (0, -1)])])
    with pytest.raises(GeometryError):
        triangulate(cx)


def test_refinements_commute_with_boundary():
    cx = build_grid(2, 3)
    tri = triangulate(cx)
    bary = barycentric_subdivide(tri.fine)
    assert len(tri.fine) == 1005
    assert len(bary.fine) == 21017
    for R in (tri, bary):
        for i in range(len(R.coarse)):
            c = R.coarse.cell_chain(i)
            if c.dim >= 1:
                assert boundary(R.refine(c)) == R.refine(boundary(c))


def test_barycentric_rejects_cells_that_are_not_simplices():
    with pytest.raises(ChainError):
        barycentric_subdivide(build_grid(1, 2))


def test_barycentric_skeleton_limits_flags():
    sd = barycentric_subdivide(triangle(), skeleton=1)
    assert sd.fine.dim == 1
    assert barycentric_subdivide(triangle()).fine.count(2) == 6


def test_deformation_identity_on_random_cycles():
    base = triangulate(build_grid(2, 2)).fine
    sd = barycentric_subdivide(base)
    for seed in range(30):
        for k in (0, 1):
            a = random_cycle(sd.fine, k, 8, seed)
            if a.is_zero():
                continue
            d = ff_deform(a)
            assert boundary(d.q_chain) == a - sd.refine(d.p_chain)
            assert d.p_chain.host is base


def test_deformation_homotopy_on_chains_that_are_not_cycles():
    sd = barycentric_subdivide(triangle())
    from horofill.chains import deformer
    d = deformer(sd)
    for j in sd.fine.cells_of_dim(1):
        a = sd.fine.cell_chain(j)
        q = d.q_chain(a)
        expect = a - sd.refine(d.p_chain(a)) - d.q_chain(boundary(a, augment=False))
        assert boundary(q) == expect


def test_deformation_needs_barycentric_host():
    with pytest.raises(CarrierMismatch):
        ff_deform(triangle().cell_chain(3))
    empty = Chain(1, {}, barycentric_subdivide(triangle()).fine)
    assert ff_deform(empty).mass_ratio_p == 0
