from fractions import Fraction

import pytest

from horofill.chains import Chain, boundary, mass
from horofill.cli import _geodesic
from horofill.extension import (Pipeline, audit_cover, audit_whitney, cover_multiplicity,
                                exploded_simplex, grid_space, lipschitz_g, ls_cover, map_g,
                                map_h0, nerve, tree_product_space, undistorted_fill, whitney)
from horofill.filling import RangeError
from horofill.spaces import CapacityError, build_tree, build_tree_product, horosphere


def product(n, D, C0):
    return build_tree_product([build_tree(2, D)] * n, [1] * n, C0)


@pytest.fixture(scope="module")
def pipe():
    sp = product(2, 4, 4)
    Z = horosphere(sp, 0, triangulated=False)
    return sp, Z, Pipeline(sp, Z)


def test_grid_cover_is_a_partition():
    X, cx = grid_space(8, 2)
    cov = X.cover(2)
    assert cover_multiplicity(cov) == 1
    assert X.an_dim == 3


def test_cover_on_grid_side_passes_audit():
    X, cx = grid_space(8, 2)
    Z = [v for v in cx.cells_of_dim(0) if cx.cells[v].coords[0] == 0]
    cov = ls_cover(X, Z, Fraction(3, 2))
    au = audit_cover(cov)
    assert au["ok"], {k: v for k, v in au.items() if isinstance(v, dict) and not v["ok"]}
    nv = nerve(cov)
    lip, bound = lipschitz_g(cov, nv)
    assert lip <= bound


def test_g_is_a_partition_of_unity(pipe):
    sp, Z, pl = pipe
    cov = pl.cover
    for x in list(cov.X.vertices)[:40]:
        w = map_g(cov, x)
        assert sum(w.values()) == 1 and all(v > 0 for v in w.values())


def test_cover_counts_at_depth_four(pipe):
    sp, Z, pl = pipe
    assert len(pl.cover) == 442
    assert pl.nerve.dim == 7
    assert audit_cover(pl.cover)["ok"]


def test_h0_lands_on_horosphere(pipe):
    sp, Z, pl = pipe
    h0 = map_h0(pl.cover, pl.nerve)
    zset = set(pl.cover.Z)
    assert all(v in zset for v in h0.values())


def test_nerve_guard():
    sp = product(2, 4, 4)
    Z = horosphere(sp, 0, triangulated=False)
    X = tree_product_space(sp)
    cov = ls_cover(X, sorted({Z.host_cell[v] for v in Z.complex.cells_of_dim(0)}), Fraction(3, 2))
    with pytest.raises(CapacityError):
        nerve(cov, max_vertices=2)


def test_undistorted_fill_of_point_pairs(pipe):
    sp, Z, pl = pipe
    zv = sorted(Z.complex.cells_of_dim(0))
    for u, w in [(zv[0], zv[-1]), (zv[3], zv[40]), (zv[10], zv[11])]:
        alpha = Chain(0, {u: 1, w: -1}, Z.complex)
        beta = _geodesic(sp, Z.host_cell[w], Z.host_cell[u])
        res = undistorted_fill(sp, Z, alpha, beta, pl)
        assert boundary(res.filling, augment=False) == alpha
        assert res.mass <= Fraction(20, 9) * (mass(beta) + 1)


def test_undistorted_fill_checks_dimension(pipe):
    sp, Z, pl = pipe
    e = Z.complex.cells_of_dim(1)[0]
    loop = Chain(1, {e: 1}, Z.complex)
    with pytest.raises((RangeError, Exception)):
        undistorted_fill(sp, Z, loop, Chain(2, {}, sp.complex), pl)


def test_pipeline_requires_unit_slope():
    sp = build_tree_product([build_tree(2, 3)] * 2, [1, 2], 3)
    Z = horosphere(sp, 0, triangulated=False)
    with pytest.raises(RangeError):
        Pipeline(sp, Z)


@pytest.mark.parametrize("L,k,count", [(4, 0, 4), (4, 1, 16), (4, 2, 64),
                                       (8, 0, 6), (8, 1, 52), (8, 2, 456),
                                       (16, 0, 8), (16, 1, 136), (16, 2, 2528)])
def test_whitney_counts(L, k, count):
    W = whitney(L, k)
    assert len(W["cubes"]) == count
    assert audit_whitney(W)["ok"]


def test_whitney_rounds_and_rejects():
    assert whitney(5, 1)["L"] == 8 and whitney(5, 1)["note"]
    with pytest.raises(ValueError):
        whitney(1, 0)


@pytest.mark.parametrize("d,counts", [(1, [4, 3]), (2, [12, 21, 10]), (3, [32, 100, 110, 41])])
def test_exploded_simplex_counts(d, counts):
    E = exploded_simplex(d)
    assert [E.complex.count(i) for i in range(d + 1)] == counts


def test_exploded_simplex_pushes_are_chain_maps():
    E = exploded_simplex(2)
    for i in range(len(E.complex)):
        c = E.complex.cell_chain(i)
        if c.dim < 1:
            continue
        for which in ("rho1", "rho2"):
            assert boundary(E.push(which, c)) == E.push(which, boundary(c))
