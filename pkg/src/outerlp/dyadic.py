"""Truncated dyadic upper half space.

A grid covers the base cube ``[0, 2^j_max)^d`` with Whitney cells: the dyadic cube
of side ``2^j`` paired with the height band ``(2^{j-1}, 2^j]`` for
``j_min <= j <= j_max``.  Level ``s = j - j_min`` holds ``2^{(L-s)d}`` cells stored
as a d-dimensional numpy array; the box over a cube is the union of that cube's
cell and every cell below it, so boxes and cells are in bijection.

The outer measure is generated by ``sigma(box) = |base|``, the weight is ``dt/t``
(mass ``|Q| ln 2`` per cell).  Super level measures are computed exactly by a
tree knapsack on the box hierarchy and also bracketed by the greedy decomposition
(upper) and a disjoint-obstruction bound (lower).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .errors import GridTooLarge, InvalidExponents

INF = math.inf
LN2 = math.log(2.0)
MAX_CELLS = 10 ** 7


# ---------------------------------------------------------------- array helpers

def _coarsen(a: np.ndarray, op=np.add) -> np.ndarray:
    d = a.ndim
    n = a.shape[0] // 2
    if d == 1:
        return op.reduce(a.reshape(n, 2), axis=1)
    return op.reduce(op.reduce(a.reshape(n, 2, n, 2), axis=3), axis=1)


def _refine(a: np.ndarray, times: int = 1) -> np.ndarray:
    f = 1 << times
    for ax in range(a.ndim):
        a = np.repeat(a, f, axis=ax)
    return a


@dataclass(frozen=True)
class Box:
    """Dyadic box over the cube ``idx * 2^j + [0, 2^j)^d``."""

    j: int
    idx: tuple

    def as_list(self) -> list:
        return [self.j, *self.idx]


@dataclass(frozen=True)
class Bracket:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper * (1 + 1e-12) + 1e-300:
            raise ValueError(f"bracket lower {self.lower} exceeds upper {self.upper}")

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    def contains(self, x: float, rtol: float = 1e-9) -> bool:
        return self.lower * (1 - rtol) <= x <= self.upper * (1 + rtol)


# ---------------------------------------------------------------- grid

@dataclass(frozen=True)
class DyadicGrid:
    d: int
    j_min: int
    j_max: int

    @property
    def L(self) -> int:
        return self.j_max - self.j_min

    @property
    def levels(self) -> range:
        return range(self.L + 1)

    def scale(self, s: int) -> int:
        return self.j_min + s

    def shape(self, s: int) -> tuple:
        return (1 << (self.L - s),) * self.d

    def sigma(self, s: int) -> float:
        return 2.0 ** (self.scale(s) * self.d)

    def sigma_units(self, s: int) -> int:
        """sigma in units of the finest base cube."""
        return 1 << (s * self.d)

    @property
    def unit(self) -> float:
        return 2.0 ** (self.j_min * self.d)

    def mass(self, s: int) -> float:
        return self.sigma(s) * LN2

    @property
    def cone_mass(self) -> float:
        """Integral of dy dt / t^{d+1} over any cell."""
        return (2.0 ** self.d - 1.0) / self.d

    @property
    def side(self) -> float:
        return 2.0 ** self.j_max

    @property
    def n_cells(self) -> int:
        return sum((1 << (self.L - s)) ** self.d for s in self.levels)

    n_boxes = n_cells

    def centers(self, s: int) -> tuple:
        """Per-axis coordinate arrays of cell centres (space) and the height ``0.75 * 2^j``."""
        h = 2.0 ** self.scale(s)
        ax = (np.arange(1 << (self.L - s)) + 0.5) * h
        return ax, 0.75 * h

    def center_points(self, s: int) -> np.ndarray:
        """Cell centres as a ``shape(s) + (d,)`` array."""
        ax, _ = self.centers(s)
        if self.d == 1:
            return ax[:, None]
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([X, Y], axis=-1)

    def base_points(self) -> np.ndarray:
        """Finest base cube centres, flattened to ``(N, d)``."""
        return self.center_points(0).reshape(-1, self.d)

    def boxes(self) -> Iterator[Box]:
        for s in reversed(self.levels):
            for idx in np.ndindex(*self.shape(s)):
                yield Box(self.scale(s), tuple(int(i) for i in idx))

    def level_of(self, box: Box) -> int:
        s = box.j - self.j_min
        if not 0 <= s <= self.L or len(box.idx) != self.d:
            raise ValueError(f"{box} is not a box of this grid")
        if any(not 0 <= i < (1 << (self.L - s)) for i in box.idx):
            raise ValueError(f"{box} lies outside the base")
        return s

    def block(self, box: Box, s: int) -> tuple:
        """Index slices of the level-``s`` cells inside ``box`` (empty above the box)."""
        sb = self.level_of(box)
        if s > sb:
            return None
        f = 1 << (sb - s)
        return tuple(slice(i * f, (i + 1) * f) for i in box.idx)


def build_grid(d: int, j_min: int, j_max: int) -> DyadicGrid:
    if d not in (1, 2):
        raise ValueError("only d = 1 and d = 2 are supported")
    if j_min > j_max:
        raise ValueError("j_min must not exceed j_max")
    g = DyadicGrid(d, j_min, j_max)
    if g.n_cells > MAX_CELLS:
        raise GridTooLarge(f"{g.n_cells} cells exceeds {MAX_CELLS}")
    return g


# ---------------------------------------------------------------- cell functions

@dataclass(frozen=True, eq=False)
class CellFunction:
    grid: DyadicGrid
    values: tuple  # one array per level s, shape grid.shape(s)

    def __post_init__(self):
        vals = tuple(np.asarray(v, dtype=float) for v in self.values)
        if len(vals) != self.grid.L + 1:
            raise ValueError("one array per level required")
        for s, v in enumerate(vals):
            if v.shape != self.grid.shape(s):
                raise ValueError(f"level {s} has shape {v.shape}, expected {self.grid.shape(s)}")
            if np.isnan(v).any() or (v < 0).any():
                raise ValueError("cell functions must be nonnegative")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: DyadicGrid) -> "CellFunction":
        return cls(grid, tuple(np.zeros(grid.shape(s)) for s in grid.levels))

    @classmethod
    def from_fn(cls, grid: DyadicGrid, fn: Callable) -> "CellFunction":
        """Sample ``fn(points, t)`` at cell centres; ``points`` has a trailing axis of length d."""
        vals = []
        for s in grid.levels:
            _, t = grid.centers(s)
            vals.append(np.broadcast_to(np.asarray(fn(grid.center_points(s), t), dtype=float),
                                        grid.shape(s)).copy())
        return cls(grid, tuple(vals))

    @classmethod
    def indicator(cls, grid: DyadicGrid, box: Box, c: float = 1.0) -> "CellFunction":
        out = [np.zeros(grid.shape(s)) for s in grid.levels]
        for s in grid.levels:
            b = grid.block(box, s)
            if b is not None:
                out[s][b] = c
        return cls(grid, tuple(out))

    def map(self, fn) -> "CellFunction":
        return CellFunction(self.grid, tuple(fn(s, v) for s, v in enumerate(self.values)))

    def __mul__(self, c: float) -> "CellFunction":
        return self.map(lambda s, v: v * c)

    __rmul__ = __mul__

    def restrict(self, keep) -> "CellFunction":
        """Zero out cells where ``keep[s]`` is False."""
        return self.map(lambda s, v: np.where(keep[s], v, 0.0))

    def sup(self) -> float:
        return max(float(v.max()) for v in self.values)

    def is_zero(self) -> bool:
        return all(not v.any() for v in self.values)

    def lp_cells(self, p: float) -> float:
        """Plain L^p norm against dy dt / t."""
        if p == INF:
            return self.sup()
        tot = sum(self.grid.mass(s) * float(np.sum(v ** p)) for s, v in enumerate(self.values))
        return tot ** (1.0 / p)


def box_totals(F: CellFunction, r: float) -> list:
    """Per level, ``sum of mass * F^r`` over the cells of each box."""
    g = F.grid
    out = []
    for s, v in enumerate(F.values):
        own = g.mass(s) * v ** r
        out.append(own if s == 0 else own + _coarsen(out[-1]))
    return out


def box_maxima(F: CellFunction) -> list:
    out = []
    for s, v in enumerate(F.values):
        out.append(v.copy() if s == 0 else np.maximum(v, _coarsen(out[-1], np.maximum)))
    return out


def box_sizes(F: CellFunction, r: float) -> list:
    if r == INF:
        return box_maxima(F)
    g = F.grid
    tot = box_totals(F, r)
    return [(t / g.sigma(s)) ** (1.0 / r) for s, t in enumerate(tot)]


def size_box(grid: DyadicGrid, F: CellFunction, E: Box, r: float) -> float:
    """l^r size of F on the box E."""
    if not r > 0:
        raise InvalidExponents("r must be positive")
    sb = grid.level_of(E)
    if r == INF:
        return max(float(F.values[s][grid.block(E, s)].max()) for s in range(sb + 1))
    tot = sum(grid.mass(s) * float(np.sum(F.values[s][grid.block(E, s)] ** r)) for s in range(sb + 1))
    return (tot / grid.sigma(sb)) ** (1.0 / r)


def sup_size(F: CellFunction, r: float) -> float:
    """Exact L^infty(l^r) quasi-norm: the supremum over boxes."""
    return max(float(a.max()) for a in box_sizes(F, r))


# ---------------------------------------------------------------- exact super level measure

def _group_children(a: np.ndarray, d: int) -> np.ndarray:
    """Per-node trailing data ``a[(idx) + (k,)]`` -> ``(parents, 2^d, k)``."""
    k = a.shape[-1]
    n = a.shape[0] // 2
    if d == 1:
        return a.reshape(n, 2, k)
    return a.reshape(n, 2, n, 2, k).transpose(0, 2, 1, 3, 4).reshape(n * n, 4, k)


def _minplus(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    P, a = A.shape
    b = B.shape[1]
    out = np.full((P, a + b - 1), INF)
    for u in range(a):
        np.minimum(out[:, u:u + b], A[:, u:u + 1] + B, out=out[:, u:u + b])
    return out


def cover_cost_units(grid: DyadicGrid, bad: list) -> int:
    """Cheapest box cover (in finest units) of the cells flagged in ``bad``."""
    cost = None
    for s in grid.levels:
        sig = grid.sigma_units(s)
        child = 0 if s == 0 else _coarsen(cost)
        c = np.where(bad[s], sig, np.minimum(sig, child))
        cost = c
    return int(cost.reshape(-1)[0])


def super_level_exact(grid: DyadicGrid, F: CellFunction, r: float, lam: float) -> float:
    """Exact inf of mu(A) over A with ``||F 1_{A^c}||_{L^inf(l^r)} <= lam``.

    Optimal sets are unions of disjoint boxes.  For finite r the recursion keeps,
    per box and per budget ``c`` (finest units), the least residual mass left inside
    the box by a cover of cost at most ``c`` that keeps every box in the subtree
    feasible; children are merged by min-plus convolution.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if r == INF:
        return cover_cost_units(grid, [v > lam for v in F.values]) * grid.unit
    d = grid.d
    R = None
    for s in grid.levels:
        top = grid.mass(s) * F.values[s].reshape(-1) ** r
        cap = lam ** r * grid.sigma(s)
        sig = grid.sigma_units(s)
        if s == 0:
            res = np.where(top <= cap, top, INF)
            R = np.stack([res, np.zeros_like(res)], axis=1)
        else:
            kids = _group_children(R.reshape(grid.shape(s - 1) + (R.shape[-1],)), d)
            acc = kids[:, 0, :]
            for c in range(1, kids.shape[1]):
                acc = _minplus(acc, kids[:, c, :])
            res = top[:, None] + acc
            res = np.where(res <= cap, res, INF)
            res[:, sig] = 0.0
            R = np.minimum.accumulate(res, axis=1)
    ok = np.flatnonzero(R[0] < INF)
    return float(ok[0]) * grid.unit


def super_level_bruteforce(grid: DyadicGrid, F: CellFunction, r: float, lam: float,
                           max_boxes: int = 14) -> float:
    """Enumerate every collection of boxes (tiny grids only)."""
    boxes = list(grid.boxes())
    if len(boxes) > max_boxes:
        raise GridTooLarge(f"{len(boxes)} boxes exceeds the brute-force limit {max_boxes}")
    masks = []
    for b in boxes:
        masks.append([np.zeros(grid.shape(s), dtype=bool) for s in grid.levels])
        for s in grid.levels:
            sl = grid.block(b, s)
            if sl is not None:
                masks[-1][s][sl] = True
    best = INF
    for sel in range(1 << len(boxes)):
        cov = [np.zeros(grid.shape(s), dtype=bool) for s in grid.levels]
        cost = 0.0
        for i, b in enumerate(boxes):
            if sel >> i & 1:
                cost += grid.sigma(grid.level_of(b))
                for s in grid.levels:
                    cov[s] |= masks[i][s]
        if cost >= best:
            continue
        if sup_size(F.restrict([~c for c in cov]), r) <= lam:
            best = cost
    return best


# ---------------------------------------------------------------- greedy dyadic decomposition

@dataclass(frozen=True)
class DyadicDecomposition:
    grid: DyadicGrid
    r: float
    selected: tuple  # ((k, n, Box), ...) in selection order
    doubling: dict  # k -> tuple of Box (maximal doubling boxes of level k)
    k_top: int  # no selection at any k >= k_top

    @property
    def ks(self) -> list:
        return sorted(self.doubling, reverse=True)

    def boxes_at(self, k: int) -> list:
        return [b for (l, _, b) in self.selected if l == k]

    def F_boxes(self, k: int) -> list:
        """Boxes whose union is F_k (doubling boxes of level k plus its selections)."""
        return list(self.doubling.get(k, ())) + self.boxes_at(k)

    def records(self) -> list:
        return [{"k": k, "n": n, "box": b.as_list()} for k, n, b in self.selected]


def _cover_box(grid, cov, box):
    for s in grid.levels:
        sl = grid.block(box, s)
        if sl is not None:
            cov[s][sl] = True


def _residual(F, cov):
    return F.restrict([~c for c in cov])


def _violations(F, cov, r, k):
    """Per level boolean arrays of boxes violating the level-k selection rule."""
    g = F.grid
    res = _residual(F, cov)
    if r == INF:
        # upper-half rule: the box's own (top) cell must carry the excess
        return [v > 2.0 ** k for v in res.values]
    tot = box_totals(res, r)
    return [t > 2.0 ** (k * r) * g.sigma(s) for s, t in enumerate(tot)]


def _pick(viol, grid):
    for s in reversed(grid.levels):
        flat = np.flatnonzero(viol[s].reshape(-1))
        if flat.size:
            idx = np.unravel_index(flat[0], grid.shape(s))
            return Box(grid.scale(s), tuple(int(i) for i in idx))
    return None


def _doubling_boxes(grid, base_cov):
    """Maximal boxes with at least half of the base covered."""
    counts = [base_cov.astype(np.int64)]
    for s in range(1, grid.L + 1):
        counts.append(_coarsen(counts[-1]))
    cand = [2 * c >= grid.sigma_units(s) for s, c in enumerate(counts)]
    for s in grid.levels:
        cand[s] &= counts[s] > 0
    anc = [None] * (grid.L + 1)
    anc[grid.L] = np.zeros(grid.shape(grid.L), dtype=bool)
    for s in range(grid.L, 0, -1):
        anc[s - 1] = _refine(anc[s] | cand[s])
    maximal, inside = [], []
    for s in reversed(grid.levels):
        m = cand[s] & ~anc[s]
        for idx in np.argwhere(m):
            maximal.append(Box(grid.scale(s), tuple(int(i) for i in idx)))
        inside.append(cand[s] | anc[s])
    return maximal, list(reversed(inside))


def greedy_decompose_dyadic(grid: DyadicGrid, F: CellFunction, r: float) -> DyadicDecomposition:
    """Backward greedy decomposition into dyadic boxes with maximal sigma per step."""
    if not r > 0:
        raise InvalidExponents("r must be positive")
    sup = sup_size(F, r)
    if sup == INF:
        raise ValueError("F must be bounded")
    if sup == 0:
        return DyadicDecomposition(grid, r, (), {}, 0)
    k_top = math.ceil(math.log2(sup))
    cov = [np.zeros(grid.shape(s), dtype=bool) for s in grid.levels]
    base = np.zeros(grid.shape(0), dtype=bool)
    selected, doubling = [], {}
    k = k_top - 1
    while True:
        qs, inside = _doubling_boxes(grid, base)
        for s in grid.levels:
            cov[s] |= inside[s]
        doubling[k] = tuple(qs)
        n = 0
        level_bases = []
        while True:
            box = _pick(_violations(F, cov, r, k), grid)
            if box is None:
                break
            n += 1
            selected.append((k, n, box))
            _cover_box(grid, cov, box)
            level_bases.append(box)
        for b in level_bases:
            base[grid.block(b, 0)] = True
        if _residual(F, cov).is_zero():
            break
        k -= 1
    return DyadicDecomposition(grid, r, tuple(selected), doubling, k_top)


def carleson_constant(dec: DyadicDecomposition) -> float:
    """max over boxes E of sum of sigma(E_{k,n} inside E) / sigma(E)."""
    g = dec.grid
    own = [np.zeros(g.shape(s), dtype=np.int64) for s in g.levels]
    for _, _, b in dec.selected:
        own[g.level_of(b)][b.idx] += g.sigma_units(g.level_of(b))
    acc, worst = None, 0.0
    for s in g.levels:
        acc = own[s] if s == 0 else own[s] + _coarsen(acc)
        worst = max(worst, float(acc.max()) / g.sigma_units(s))
    return worst


def sparse_witness(dec: DyadicDecomposition):
    """Disjoint subsets of the selected bases: each base minus the bases chosen at higher k.

    Returns ``(min fraction kept, max overlap count)``; sparseness with constant 1/2
    means fraction >= 1/2 and overlap <= 1.
    """
    g = dec.grid
    higher = np.zeros(g.shape(0), dtype=bool)
    counter = np.zeros(g.shape(0), dtype=np.int64)
    worst = 1.0
    for k in dec.ks:
        boxes = dec.boxes_at(k)
        for b in boxes:
            sl = g.block(b, 0)
            keep = ~higher[sl]
            counter[sl] += keep
            worst = min(worst, float(keep.mean()))
        for b in boxes:
            higher[g.block(b, 0)] = True
    return worst, int(counter.max()) if counter.size else 0


def optimal_covering_bound(r: float) -> float:
    if r == INF:
        return 1.0
    return 2.0 ** (2 * r) / (2.0 ** r - 1.0)


COVERING_BOUND = 2.0


@dataclass
class DyadicReport:
    superlevel_ok: bool = True
    maximal_ok: bool = True
    covering_ok: bool = True
    optimal_ok: bool = True
    carleson: float = 0.0
    sparse_fraction: float = 1.0
    sparse_overlap: int = 0
    c_cover: float = 0.0
    c_opt: float = 0.0
    witness: dict = field(default_factory=dict)

    @property
    def carleson_ok(self) -> bool:
        return self.carleson <= 2.0

    @property
    def sparse_ok(self) -> bool:
        return self.sparse_fraction >= 0.5 and self.sparse_overlap <= 1

    @property
    def ok(self) -> bool:
        return (self.superlevel_ok and self.maximal_ok and self.covering_ok and self.optimal_ok
                and self.carleson_ok and self.sparse_ok)


def verify_dyadic_decomposition(F: CellFunction, dec: DyadicDecomposition, *,
                                exact_levels: bool = True) -> DyadicReport:
    """Replay the decomposition and check its level properties.

    ``exact_levels`` adds the covering and optimal-covering constants, which need
    exact super level measures.
    """
    g, r = dec.grid, dec.r
    rep = DyadicReport()
    cov = [np.zeros(g.shape(s), dtype=bool) for s in g.levels]
    for k in dec.ks:
        for q in dec.doubling[k]:
            _cover_box(g, cov, q)
        for b in dec.boxes_at(k):
            s = g.level_of(b)
            if not _violations(F, cov, r, k)[s][b.idx]:
                rep.superlevel_ok = False
                rep.witness.setdefault("superlevel", {"k": k, "box": b.as_list()})
            _cover_box(g, cov, b)
        res = sup_size(_residual(F, cov), r)
        if res > 2.0 ** k * (1 + 1e-12):
            rep.maximal_ok = False
            rep.witness.setdefault("maximal", {"k": k, "residual": res})
    if dec.selected and not _residual(F, cov).is_zero():
        rep.maximal_ok = False
        rep.witness.setdefault("maximal", {"k": "bottom"})
    rep.carleson = carleson_constant(dec)
    rep.sparse_fraction, rep.sparse_overlap = sparse_witness(dec)
    if exact_levels and dec.selected:
        ks = dec.ks
        for k in range(ks[-1] - 1, dec.k_top + 1):
            tail = sum(g.sigma(g.level_of(b)) for (l, _, b) in dec.selected if l >= k)
            m = super_level_exact(g, F, r, 2.0 ** k)
            if m > 0:
                c = m / tail if tail > 0 else INF
                rep.c_cover = max(rep.c_cover, c)
            here = sum(g.sigma(g.level_of(b)) for b in dec.boxes_at(k))
            if here:
                m_prev = super_level_exact(g, F, r, 2.0 ** (k - 1))
                rep.c_opt = max(rep.c_opt, here / m_prev if m_prev > 0 else INF)
        rep.covering_ok = rep.c_cover <= COVERING_BOUND * (1 + 1e-12)
        rep.optimal_ok = rep.c_opt <= optimal_covering_bound(r) * (1 + 1e-12)
    return rep


# ---------------------------------------------------------------- brackets

def super_level_lower(grid: DyadicGrid, F: CellFunction, r: float, lam: float) -> float:
    """Lower bound on the super level measure from disjoint obstructions.

    If a box's top cell alone exceeds the budget, any feasible set contains the box
    (cost ``sigma``).  Otherwise the mass removed inside it must reach ``need`` using
    proper sub-boxes of density at most ``sub``, costing at least ``need / sub``.
    Bounds of disjoint boxes add up, so the best antichain is found bottom-up.
    """
    best = None
    if r == INF:
        for s, v in enumerate(F.values):
            lb = np.where(v > lam, float(grid.sigma_units(s)), 0.0)
            best = lb if s == 0 else np.maximum(lb, _coarsen(best))
        return float(best.reshape(-1)[0]) * grid.unit
    tot = box_totals(F, r)
    dens = None
    for s, v in enumerate(F.values):
        sig_u = float(grid.sigma_units(s))
        T = tot[s]
        top = grid.mass(s) * v ** r
        need = T - lam ** r * grid.sigma(s)
        if s == 0:
            lb = np.where(need > 0, sig_u, 0.0)
        else:
            sub = _coarsen(dens, np.maximum)  # max density of proper sub-boxes
            forced = need > (T - top) * (1 + 1e-12)
            with np.errstate(divide="ignore", invalid="ignore"):
                frac = np.where(sub > 0, need / sub / grid.unit, INF)
            lb = np.where(need > 0, np.where(forced, sig_u, np.minimum(sig_u, frac)), 0.0)
            lb = np.maximum(lb, _coarsen(best))
        d_here = T / grid.sigma(s)
        dens = d_here if s == 0 else np.maximum(d_here, _coarsen(dens, np.maximum))
        best = lb
    return float(best.reshape(-1)[0]) * grid.unit


def _maximal_sigma(grid, boxes) -> float:
    cov = [np.zeros(grid.shape(s), dtype=bool) for s in grid.levels]
    for b in boxes:
        _cover_box(grid, cov, b)
    return cover_cost_units(grid, cov) * grid.unit


def super_level_upper(grid: DyadicGrid, F: CellFunction, r: float, lam: float,
                      dec: DyadicDecomposition | None = None) -> float:
    """mu of the decomposition's F_k with ``2^k <= lam`` (a feasible set)."""
    if dec is None:
        dec = greedy_decompose_dyadic(grid, F, r)
    if not dec.selected:
        return 0.0
    k = math.floor(math.log2(lam))
    if k >= dec.k_top:
        return 0.0
    ks = dec.ks
    if k < ks[-1]:
        k = ks[-1]
    boxes = []
    for l in ks:
        if l >= k:
            boxes.extend(dec.F_boxes(l))
    return _maximal_sigma(grid, boxes)


def super_level_bracket(grid: DyadicGrid, F: CellFunction, r: float, lam: float,
                        dec: DyadicDecomposition | None = None) -> Bracket:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if lam >= sup_size(F, r):
        return Bracket(0.0, 0.0)
    lo = super_level_lower(grid, F, r, lam)
    hi = super_level_upper(grid, F, r, lam, dec)
    return Bracket(lo, hi)


# ---------------------------------------------------------------- quasi-norms

def _support_cover(grid, F) -> float:
    return cover_cost_units(grid, [v > 0 for v in F.values]) * grid.unit


def _flat_threshold(F, r) -> float:
    """Below this lambda every positive cell must be removed, so m(lambda) = m(0+)."""
    pos = [v[v > 0] for v in F.values]
    low = min((float(p.min()) for p in pos if p.size), default=INF)
    return low if r == INF else low * LN2 ** (1.0 / r)


class _LevelOracle:
    def __init__(self, grid, F, r, method):
        self.grid, self.F, self.r, self.method = grid, F, r, method
        self.dec = greedy_decompose_dyadic(grid, F, r) if method == "bracket" else None
        self.m0 = _support_cover(grid, F)
        self.flat = _flat_threshold(F, r)
        self.sup = sup_size(F, r)
        self.cache = {}

    def __call__(self, lam):
        if lam in self.cache:
            return self.cache[lam]
        if lam >= self.sup:
            out = (0.0, 0.0)
        elif lam < self.flat:
            out = (self.m0, self.m0)
        elif self.method == "exact":
            v = super_level_exact(self.grid, self.F, self.r, lam)
            out = (v, v)
        else:
            b = super_level_bracket(self.grid, self.F, self.r, lam, self.dec)
            out = (b.lower, b.upper)
        self.cache[lam] = out
        return out


def _descending_levels(orc, step: float):
    """Evaluate ``(lambda, lo, hi)`` on ``2^{i * step}`` downward from the sup.

    Stops once the lower bound reaches ``m(0+)``: ``m`` is nonincreasing and never
    exceeds the support cover, so it is constant below that point.
    """
    i = math.ceil(math.log2(orc.sup) / step)
    out = []
    while True:
        lam = 2.0 ** (i * step)
        lo, hi = orc(lam)
        out.append((lam, lo, hi))
        if lo == orc.m0 or lam < orc.flat:
            return out
        i -= 1


def outer_quasinorm(grid: DyadicGrid, F: CellFunction, p: float, r: float, *,
                    mode: str = "discrete", method: str = "exact",
                    levels_per_octave: int = 4) -> Bracket:
    """Certified bracket for the outer L^p(l^r) quasi-norm of F.

    ``mode="discrete"`` is ``(sum_k 2^{kp} m(2^k))^{1/p}``; ``mode="integral"`` is the
    layer cake integral bracketed by Riemann sums on ``levels_per_octave`` points per
    octave.  ``method`` selects exact super level measures or the cheap bracket.
    """
    if not (p > 0 and r > 0):
        raise InvalidExponents("p and r must be positive")
    if p == INF:
        v = sup_size(F, r)
        return Bracket(v, v)
    if F.is_zero():
        return Bracket(0.0, 0.0)
    orc = _LevelOracle(grid, F, r, method)
    if mode == "discrete":
        pts = _descending_levels(orc, 1.0)
        lo = hi = 0.0
        for lam, a, b in pts:
            lo += lam ** p * a
            hi += lam ** p * b
        tail = orc.m0 * pts[-1][0] ** p / (2.0 ** p - 1.0)
        return Bracket((lo + tail) ** (1 / p), (hi + tail) ** (1 / p))
    if mode != "integral":
        raise ValueError(f"unknown mode {mode!r}")
    pts = _descending_levels(orc, 1.0 / levels_per_octave)[::-1]
    lo = hi = orc.m0 * pts[0][0] ** p
    for (l0, _, hi0), (l1, lo1, _) in zip(pts[:-1], pts[1:]):
        w = l1 ** p - l0 ** p
        lo += w * lo1
        hi += w * hi0
    return Bracket(lo ** (1 / p), hi ** (1 / p))


def outer_weak_quasinorm(grid: DyadicGrid, F: CellFunction, p: float, r: float, *,
                         method: str = "exact", levels_per_octave: int = 4) -> Bracket:
    """Certified bracket for ``(sup_lambda lambda^p m(lambda))^{1/p}``."""
    if p == INF:
        v = sup_size(F, r)
        return Bracket(v, v)
    if F.is_zero():
        return Bracket(0.0, 0.0)
    orc = _LevelOracle(grid, F, r, method)
    pts = _descending_levels(orc, 1.0 / levels_per_octave)[::-1]
    lo = hi = orc.m0 * pts[0][0] ** p
    for (l0, lo0, hi0), (l1, _, _) in zip(pts[:-1], pts[1:]):
        lo = max(lo, l0 ** p * lo0)
        hi = max(hi, l1 ** p * hi0)
    return Bracket(lo ** (1 / p), hi ** (1 / p))


def super_level_profile(grid: DyadicGrid, F: CellFunction, r: float, *,
                        levels_per_octave: int = 4, method: str = "exact") -> list:
    """``(lambda, lower, upper)`` triples on the geometric grid used by the norms."""
    orc = _LevelOracle(grid, F, r, method)
    if orc.sup == 0:
        return []
    return _descending_levels(orc, 1.0 / levels_per_octave)[::-1]


def scale_map(grid: DyadicGrid, F: CellFunction, a: float) -> CellFunction:
    """Multiply each cell by ``(2^j)^a``, the band top raised to ``a``."""
    return F.map(lambda s, v: v * 2.0 ** (grid.scale(s) * a))
