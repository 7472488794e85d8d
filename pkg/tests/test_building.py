import warnings

import pytest

from horofill.building import (XI, VerticalGeodesic, chamber_from_json, chamber_to_json,
                               direction, dist_to_geodesic, downward_link, is_characteristic,
                               is_opposite, opposite_witness, project_to_geodesic,
                               ray_to_horosphere, slice_project, top_chamber)
from horofill.spaces import CapacityError, build_tree, build_tree_product


def product(n, D, C0):
    return build_tree_product([build_tree(2, D)] * n, [1] * n, C0)


def test_top_chamber_is_up_everywhere():
    sp = product(2, 2, 2)
    root = sp.factors[0].index[""]
    assert direction(sp, (root, root), top_chamber(sp)) == ("up", "up")


def test_link_size_at_root():
    sp = product(2, 2, 2)
    root = sp.factors[0].index[""]
    link = downward_link(sp, (root, root))
    assert len(link) == 16
    assert all(is_characteristic(sp, (root, root), c) for c in link.chambers())


def test_link_empty_at_leaf_and_warning_below_level():
    sp = product(2, 2, 2)
    leaf = sp.factors[0].leaves[0]
    with warnings.catch_warnings(record=True) as got:
        warnings.simplefilter("always")
        link = downward_link(sp, (leaf, leaf))
    assert link.empty and len(link) == 0
    assert got


def test_characteristic_iff_in_link():
    sp = product(2, 3, 3)
    t = sp.factors[0]
    ends = list(t.leaves) + [XI]
    for x in [(t.index["0"], t.index["1"]), (t.index[""], t.index["01"])]:
        link = downward_link(sp, x)
        for a in ends:
            for b in ends:
                assert is_characteristic(sp, x, (a, b)) == ((a, b) in link)


def test_chamber_json_round_trip():
    sp = product(2, 2, 2)
    c = (sp.factors[0].index["01"], XI)
    assert chamber_to_json(sp, c) == ["01", "xi"]
    assert chamber_from_json(sp, ["01", "xi"]) == c


def test_opposite_witness_exhaustive():
    sp = product(2, 4, 4)
    t = sp.factors[0]
    x = (t.index["0"], t.index["10"])
    w = opposite_witness(sp, x)
    assert w["failures"] == [] and w["dist_sq"] == 2
    assert w["checked"] == len(downward_link(sp, x))
    assert is_opposite((1, 2), (3, 4)) and not is_opposite((1, 2), (1, 4))


def test_opposite_witness_at_root_fails_loudly():
    sp = product(2, 2, 2)
    root = sp.factors[0].index[""]
    with pytest.raises(CapacityError):
        opposite_witness(sp, (root, root))


def test_ray_reaches_level():
    sp = product(2, 4, 4)
    t = sp.factors[0]
    x = (t.index[""], t.index[""])
    c = (t.index["0000"], t.index["1111"])
    end = ray_to_horosphere(sp, x, c, 0)
    assert end.steps == 2 and end.remainder == 0
    assert sp.h_of(end.vertex) == 0


def test_projection_to_vertical_geodesic():
    t = build_tree(2, 3)
    g = VerticalGeodesic(t, t.index["000"])
    assert project_to_geodesic(g, t.index["11"]) == t.index["00"]
    assert dist_to_geodesic(g, t.index["11"]) == 2
    assert dist_to_geodesic(g, t.index["0"]) == 0
    sp = product(2, 3, 3)
    v = (t.index["11"], t.index["1"])
    assert slice_project(sp, 0, g, v) == (t.index["00"], t.index["1"])
