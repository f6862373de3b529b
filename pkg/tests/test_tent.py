import math

import numpy as np
import pytest

from outerlp.dyadic import INF, Box, CellFunction, build_grid
from outerlp.errors import AtomViolation, InvalidExponents
from outerlp.harness import random_cell_function
from outerlp.tent import (
    area_functional,
    atom_lemma_value,
    ball_volume,
    equivalence_ratio,
    hls_check,
    make_atom,
    tent_functional,
    tent_norm,
    tent_region,
)


def one_cell(grid, s, idx, c=1.0):
    vals = [np.zeros(grid.shape(k)) for k in grid.levels]
    vals[s][idx] = c
    return CellFunction(grid, tuple(vals))


def test_zero():
    g = build_grid(1, -2, 2)
    Z = CellFunction.zeros(g)
    for p, r in [(2.0, 2.0), (INF, 2.0), (1.0, INF)]:
        assert tent_norm(g, Z, p, r) == 0
    assert equivalence_ratio(g, Z, 2.0, 2.0).ratio_low == 1.0


def test_one_cell_inf():
    g = build_grid(1, -2, 2)
    assert tent_norm(g, one_cell(g, 2, 1), INF, INF) == 1.0


def test_one_cell_area_integral():
    g = build_grid(1, -2, 2)
    F = one_cell(g, 2, 1)  # centre 1.5, height 0.75
    xs = g.base_points()[:, 0]
    inside = np.abs(xs - 1.5) < 0.75
    expect = math.sqrt(inside.sum() * 0.25 * g.cone_mass)
    assert inside.sum() == 6
    assert tent_norm(g, F, 2.0, 2.0) == pytest.approx(expect, rel=1e-12)
    assert tent_norm(g, F, 2.0, 2.0) == pytest.approx(math.sqrt(1.5), rel=1e-12)


def test_aperture_monotone():
    g = build_grid(1, -1, 4)
    F = random_cell_function(g, np.random.default_rng(4))
    wide = area_functional(g, F, 2.0, aperture=1.0)
    narrow = area_functional(g, F, 2.0, aperture=0.5)
    assert np.all(narrow <= wide + 1e-15)


def test_tent_functional_r_inf_is_sup():
    g = build_grid(1, 0, 3)
    F = random_cell_function(g, np.random.default_rng(5))
    assert np.all(tent_functional(g, F, INF) == F.sup())


def test_tent_functional_single_cell():
    g = build_grid(1, 0, 2)
    F = one_cell(g, 0, 0, 2.0)  # centre 0.5, height 0.75, mass ln 2
    C = tent_functional(g, F, 1.0)
    xs = g.base_points()[:, 0]
    expect = 2.0 * math.log(2) / ball_volume(1, 0.75 + np.abs(xs - 0.5))
    assert C == pytest.approx(expect, rel=1e-12)


def test_tent_region_nested():
    g = build_grid(1, -3, 2)
    small = tent_region(g, Box(0, (1,)))  # ball (1, 2)
    big = tent_region(g, Box(2, (0,)))  # ball (0, 4)
    assert sum(m.sum() for m in small) < sum(m.sum() for m in big)
    assert all(not (a & ~b).any() for a, b in zip(small, big))


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_p_equals_r_comparable_to_plain_norm(p):
    g = build_grid(1, -2, 4)
    rng = np.random.default_rng(int(p))
    for _ in range(4):
        F = random_cell_function(g, rng)
        ratio = tent_norm(g, F, p, p) / F.lp_cells(p)
        assert 0.5 <= ratio <= 3.0
        er = equivalence_ratio(g, F, p, p)
        assert er.ratio_low <= er.ratio_high


def test_hls_invalid():
    g = build_grid(1, 0, 2)
    with pytest.raises(InvalidExponents):
        hls_check(g, CellFunction.zeros(g), 2.0, 2.0, 2.0, 2.0)
    with pytest.raises(InvalidExponents):
        hls_check(g, CellFunction.zeros(g), 1.0, 2.0, 1.0, 2.0)
    assert hls_check(g, CellFunction.zeros(g), 1.0, 2.0, 2.0, 1.0).ratio == 0


def test_hls_random_finite():
    g = build_grid(1, -2, 4)
    F = random_cell_function(g, np.random.default_rng(8))
    res = hls_check(g, F, 1.0, 2.0, 2.0, 1.0)
    assert 0 < res.ratio < INF


def test_atom_inf_bound():
    g = build_grid(1, -4, 2)
    a = make_atom(g, Box(0, (1,)), INF)
    assert a.sup() == pytest.approx(1.0)
    assert atom_lemma_value(g, a, INF, INF, INF) <= 1.0


@pytest.mark.parametrize("q,r2,r1", [(2.0, 2.0, 2.0), (2.0, 2.0, INF), (4.0, 4.0, 4.0)])
def test_atom_lemma(q, r2, r1):
    g = build_grid(1, -5, 3)
    for kind in ("flat", "random"):
        a = make_atom(g, Box(1, (1,)), r1, kind=kind, rng=np.random.default_rng(0))
        assert atom_lemma_value(g, a, q, r2, r1) <= 1.1


def test_atom_too_small():
    g = build_grid(1, 0, 3)
    with pytest.raises(AtomViolation):
        make_atom(g, Box(0, (0,)), 2.0)


def test_atom_lemma_exponent_check():
    g = build_grid(1, -3, 2)
    a = make_atom(g, Box(1, (0,)), 2.0)
    with pytest.raises(InvalidExponents):
        atom_lemma_value(g, a, 1.0, 2.0, 2.0)
