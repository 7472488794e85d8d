from fractions import Fraction

import pytest

from horofill.chains import Chain, ChainError, boundary, mass
from horofill.filling import (RangeError, cone_fill, fit_exponent, growth_ratios, min_fill_lp,
                              min_fill_oracle, run_jobs, sweep_and_fit)
from horofill.spaces import build_grid, build_tree, build_tree_product, horosphere, random_cycle


def square_loop(cx, L, side):
    """Boundary of the side x side block of squares at the corner of an L grid."""
    sq = [i for i in cx.cells_of_dim(2)
          if max(cx.cells[v].coords[0] for v in cx.vertices(i)) <= side
          and max(cx.cells[v].coords[1] for v in cx.vertices(i)) <= side]
    return boundary(Chain(2, {i: 1 for i in sq}, cx))


@pytest.mark.parametrize("side,area", [(1, 1), (2, 4), (3, 9)])
def test_lp_fills_square_loops_exactly(side, area):
    cx = build_grid(4, 2)
    a = square_loop(cx, 4, side)
    r = min_fill_lp(cx, a)
    assert r.lp_status == "optimal"
    assert r.mass == area and r.duality_gap == 0
    assert boundary(r.filling) == a


def test_lp_and_oracle_agree_on_random_cycles():
    cx = build_grid(2, 3)
    for seed in range(6):
        a = random_cycle(cx, 1, 6, seed)
        if a.is_zero():
            continue
        lp = min_fill_lp(cx, a)
        ora = min_fill_oracle(cx, a, coeff_bound=1)
        assert lp.mass == ora.mass


def test_fractional_cycle_has_fractional_fill():
    cx = build_grid(2, 2)
    a = Fraction(1, 3) * square_loop(cx, 2, 1)
    assert min_fill_lp(cx, a).mass == Fraction(1, 3)


def test_non_cycle_rejected_and_unfillable_reported():
    cx = build_grid(2, 2)
    with pytest.raises(ChainError):
        min_fill_lp(cx, cx.cell_chain(cx.cells_of_dim(1)[0]))
    Z = horosphere(build_tree_product([build_tree(2, 4)] * 2, [1, 1], 4), 0, triangulated=False)
    v = Z.complex.cells_of_dim(0)
    a = Chain(0, {v[0]: 1, v[-1]: -1}, Z.complex)
    assert min_fill_lp(Z.complex, a).lp_status == "optimal"


def test_cone_fill_on_three_factor_horosphere():
    sp = build_tree_product([build_tree(2, 3)] * 3, [1] * 3, 4)
    Z = horosphere(sp, 0, triangulated=False)
    a = random_cycle(Z, 1, 8, seed=1)
    f = cone_fill(sp, Z, a).filling
    assert boundary(f) == a
    small = build_tree_product([build_tree(2, 3)] * 2, [1] * 2, 3)
    Z2 = horosphere(small, 0, triangulated=False)
    with pytest.raises(RangeError):
        cone_fill(small, Z2, random_cycle(Z2, 1, 8, seed=1))


def test_fit_recovers_known_exponent():
    fit = fit_exponent([(n, n * n) for n in (2, 4, 8, 16)])
    assert fit.exponent == pytest.approx(2.0)
    assert fit.r_squared == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fit_exponent([(1, 1)])


def test_sweep_needs_four_sizes():
    with pytest.raises(ValueError):
        sweep_and_fit(None, None, [1, 2, 3])


def test_sweep_on_grid_squares():
    cx = build_grid(6, 2)
    fit = sweep_and_fit(lambda s: (cx, square_loop(cx, 6, s), None),
                        lambda c, a, r: min_fill_lp(c, a, r), [1, 2, 3, 4])
    assert fit.exponent == pytest.approx(2.0)


def test_growth_ratios():
    assert growth_ratios([1, 2, 6]) == [2, 3]


def _square(x):
    return x * x


def test_run_jobs_is_order_independent():
    items = [(i, i) for i in range(20)]
    assert run_jobs(_square, items, jobs=1) == run_jobs(_square, items, jobs=3)
