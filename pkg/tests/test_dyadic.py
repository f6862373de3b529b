import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from outerlp.dyadic import (
    INF,
    Box,
    Bracket,
    CellFunction,
    build_grid,
    carleson_constant,
    greedy_decompose_dyadic,
    outer_quasinorm,
    outer_weak_quasinorm,
    scale_map,
    size_box,
    sparse_witness,
    sup_size,
    super_level_bracket,
    super_level_bruteforce,
    super_level_exact,
    super_level_profile,
    verify_dyadic_decomposition,
)
from outerlp.errors import GridTooLarge
from outerlp.harness import random_cell_function

LN2 = math.log(2.0)
TINY = [(1, 0, 2), (1, -1, 1), (2, 0, 1), (1, 0, 0)]


def as_oracle(grid, F):
    """Cells as points, boxes as generators: ``(n, mu, w, f)`` for the brute-force oracle."""
    cells = [(s, idx) for s in grid.levels for idx in np.ndindex(*grid.shape(s))]
    pos = {c: i for i, c in enumerate(cells)}
    w = [grid.mass(s) for s, _ in cells]
    f = [float(F.values[s][idx]) for s, idx in cells]
    gens = []
    for b in grid.boxes():
        sb = grid.level_of(b)
        m = 0
        for s in range(sb + 1):
            sl = grid.block(b, s)
            for idx in np.ndindex(*grid.shape(s)):
                if all(x.start <= i < x.stop for i, x in zip(idx, sl)):
                    m |= 1 << pos[(s, idx)]
        gens.append((m, grid.sigma(sb)))
    n = len(cells)
    return n, oracles.mu_table(n, gens), w, f


cell_values = st.integers(0, 12).map(lambda k: k / 4)


@st.composite
def tiny_functions(draw):
    d, lo, hi = draw(st.sampled_from(TINY[:3]))
    g = build_grid(d, lo, hi)
    vals = tuple(np.array(draw(st.lists(cell_values, min_size=int(np.prod(g.shape(s))),
                                        max_size=int(np.prod(g.shape(s)))))).reshape(g.shape(s))
                 for s in g.levels)
    return g, CellFunction(g, vals)


# ---------------------------------------------------------------- grid

def test_grid_counts():
    g = build_grid(1, 0, 0)
    assert g.n_cells == 1 and len(list(g.boxes())) == 1
    assert g.sigma(0) == 1 and g.mass(0) == pytest.approx(LN2)
    g = build_grid(1, 0, 2)
    assert g.n_cells == 7 and len(list(g.boxes())) == 7
    g = build_grid(2, 0, 1)
    assert g.n_cells == sum((2 ** (1 - j)) ** 2 for j in (0, 1)) == 5
    g = build_grid(2, -2, 3)
    assert g.n_cells == sum((2 ** (3 - j)) ** 2 for j in range(-2, 4))


def test_grid_errors():
    with pytest.raises(GridTooLarge):
        build_grid(2, 0, 13)
    with pytest.raises(ValueError):
        build_grid(1, 2, 1)
    with pytest.raises(ValueError):
        build_grid(3, 0, 1)
    g = build_grid(1, 0, 2)
    with pytest.raises(ValueError):
        g.level_of(Box(0, (4,)))


def test_boxes_partition_into_cells():
    g = build_grid(2, -1, 2)
    for b in g.boxes():
        sb = g.level_of(b)
        mass = sum(g.mass(s) * F.size for s in range(sb + 1)
                   for F in [np.zeros(g.shape(s))[g.block(b, s)]])
        assert mass == pytest.approx(g.mass(sb) * (sb + 1))


def test_bracket_checks_order():
    with pytest.raises(ValueError):
        Bracket(2.0, 1.0)
    assert Bracket(1.0, 1.0).exact


# ---------------------------------------------------------------- sizes

@pytest.mark.parametrize("r", [1.0, 2.0, 3.0])
def test_size_constant(r):
    g = build_grid(1, 0, 3)
    F = CellFunction.from_fn(g, lambda x, t: np.full(x.shape[:-1], 2.5))
    assert size_box(g, F, Box(0, (0,)), r) == pytest.approx(LN2 ** (1 / r) * 2.5)
    assert size_box(g, F, Box(2, (0,)), r) == pytest.approx((3 * LN2) ** (1 / r) * 2.5)
    assert size_box(g, F, Box(2, (0,)), INF) == 2.5


def test_size_single_cell():
    g = build_grid(1, 0, 1)
    F = CellFunction.indicator(g, Box(0, (1,)))
    assert size_box(g, F, Box(1, (0,)), 1.0) == pytest.approx(LN2 / 2)
    assert size_box(g, CellFunction.zeros(g), Box(1, (0,)), 2.0) == 0


# ---------------------------------------------------------------- super level measures

@settings(max_examples=60, deadline=None)
@given(tiny_functions(), st.sampled_from([1.0, 2.0, INF]), st.integers(1, 12).map(lambda k: k / 4))
def test_exact_dp_matches_oracle(gf, r, lam):
    g, F = gf
    n, mu, w, f = as_oracle(g, F)
    expect = oracles.super_level(n, mu, w, f, r, lam)
    got = super_level_exact(g, F, r, lam)
    assert got == pytest.approx(expect, rel=1e-9, abs=1e-12)
    assert super_level_bruteforce(g, F, r, lam) == pytest.approx(expect, rel=1e-9, abs=1e-12)
    assert sup_size(F, r) == pytest.approx(oracles.sup_size(n, mu, w, f, r), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(tiny_functions(), st.sampled_from([1.0, 2.0, INF]), st.integers(1, 12).map(lambda k: k / 4))
def test_bracket_contains_exact(gf, r, lam):
    g, F = gf
    b = super_level_bracket(g, F, r, lam)
    assert b.lower <= b.upper * (1 + 1e-12)
    assert b.contains(super_level_exact(g, F, r, lam))


@pytest.mark.parametrize("L", [4, 5])
@pytest.mark.parametrize("r", [1.0, 2.0, INF])
def test_bracket_contains_exact_random(L, r):
    g = build_grid(1, 0, L)
    rng = np.random.default_rng(L)
    for _ in range(5):
        F = random_cell_function(g, rng)
        for lam in (0.25, 0.5, 1.0, 2.0):
            assert super_level_bracket(g, F, r, lam).contains(super_level_exact(g, F, r, lam))


def test_bracket_trivial_cases():
    g = build_grid(1, 0, 2)
    F = CellFunction.indicator(g, Box(1, (1,)), 3.0)
    assert super_level_bracket(g, F, 2.0, sup_size(F, 2.0)) == Bracket(0.0, 0.0)
    lam = size_box(g, F, Box(1, (1,)), INF) * 0.999
    b = super_level_bracket(g, F, INF, lam)
    assert b.lower == b.upper == g.sigma(1)


def test_r_inf_bracket_is_cover_of_level_set():
    g = build_grid(1, 0, 4)
    F = random_cell_function(g, np.random.default_rng(3))
    for lam in (0.5, 1.0, 2.0):
        exact = super_level_exact(g, F, INF, lam)
        assert super_level_bracket(g, F, INF, lam).contains(exact)


# ---------------------------------------------------------------- quasi-norms

@settings(max_examples=40, deadline=None)
@given(tiny_functions(), st.sampled_from([1.0, 2.0, INF]), st.sampled_from([1.0, 2.0]))
def test_norm_brackets_contain_oracle(gf, r, p):
    g, F = gf
    n, mu, w, f = as_oracle(g, F)
    exact = oracles.lp_norm(n, mu, w, f, p, r)
    assert outer_quasinorm(g, F, p, r, mode="integral").contains(exact)
    assert outer_quasinorm(g, F, p, r, mode="integral", method="bracket").contains(exact)
    weak = oracles.weak_norm(n, mu, w, f, p, r)
    assert outer_weak_quasinorm(g, F, p, r).contains(weak)


def test_single_cell_norm():
    g = build_grid(1, 0, 0)
    F = CellFunction(g, (np.array([3.0]),))
    b = outer_quasinorm(g, F, 1.0, 2.0, mode="integral")
    assert b.contains(oracles.TOP_CELL_SIZE)
    assert outer_quasinorm(g, F, 1.0, 2.0).lower == pytest.approx(4.0)
    assert outer_quasinorm(g, F, INF, 2.0).lower == pytest.approx(oracles.TOP_CELL_SIZE)


def test_norm_zero_and_sup():
    g = build_grid(1, 0, 3)
    assert outer_quasinorm(g, CellFunction.zeros(g), 2.0, 2.0) == Bracket(0.0, 0.0)
    F = random_cell_function(g, np.random.default_rng(1))
    top = max(size_box(g, F, b, 2.0) for b in g.boxes())
    assert outer_quasinorm(g, F, INF, 2.0) == Bracket(top, top)


def test_profile_monotone():
    g = build_grid(1, 0, 5)
    F = random_cell_function(g, np.random.default_rng(2))
    prof = super_level_profile(g, F, 2.0)
    lams = [p[0] for p in prof]
    assert lams == sorted(lams)
    assert all(a[1] >= b[1] for a, b in zip(prof, prof[1:]))


# ---------------------------------------------------------------- decomposition

def test_decompose_zero():
    g = build_grid(1, 0, 3)
    dec = greedy_decompose_dyadic(g, CellFunction.zeros(g), 2.0)
    assert dec.selected == ()


def test_decompose_single_box_r_inf():
    g = build_grid(1, 0, 4)
    box = Box(2, (1,))
    F = CellFunction.indicator(g, box, 5.0)
    dec = greedy_decompose_dyadic(g, F, INF)
    assert [b for _, _, b in dec.selected] == [box]
    assert dec.selected[0][0] == math.floor(math.log2(5.0))
    assert carleson_constant(dec) == 1.0
    assert verify_dyadic_decomposition(F, dec).ok


@pytest.mark.parametrize("r", [1.0, 2.0, INF])
@pytest.mark.parametrize("d,L", [(1, 6), (2, 3)])
def test_decompose_random(r, d, L):
    g = build_grid(d, 0, L)
    rng = np.random.default_rng(10 * L + d)
    for _ in range(6):
        F = random_cell_function(g, rng)
        dec = greedy_decompose_dyadic(g, F, r)
        rep = verify_dyadic_decomposition(F, dec)
        assert rep.ok, rep.witness
        assert rep.carleson <= 2.0
        frac, overlap = sparse_witness(dec)
        assert frac >= 0.5 and overlap <= 1


# ---------------------------------------------------------------- scale map

def test_scale_map():
    g = build_grid(1, -1, 2)
    F = random_cell_function(g, np.random.default_rng(0))
    same = scale_map(g, F, 0.0)
    assert all(np.array_equal(a, b) for a, b in zip(same.values, F.values))
    one = CellFunction.indicator(g, Box(1, (0,)), 1.0).restrict(
        [np.zeros(g.shape(s), bool) if s != 2 else np.ones(g.shape(s), bool) for s in g.levels])
    out = scale_map(g, one, 1.5)
    assert out.values[2][0] == pytest.approx(2.0 ** 1.5)
