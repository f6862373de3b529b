"""Embedding maps ``F_phi(f)(y, t) = int f(x) t^{-d} phi((y - x) / t) dx`` into the grid.

Source functions are piecewise constant on a dyadic mesh of the base, possibly finer
than the finest grid cells.  For kernels with a closed-form antiderivative (box,
d = 1 decay, separable smooth bump) the convolution is summed over the jumps of f,

    F(y, t) = sum_i (f_i - f_{i-1}) K((y - x_i) / t),    K' = phi,

which is exact.  The d = 2 decay kernel is radial and uses midpoint quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .dyadic import (
    INF,
    Box,
    Bracket,
    CellFunction,
    DyadicGrid,
    build_grid,
    outer_quasinorm,
    outer_weak_quasinorm,
    scale_map,
    size_box,
    sup_size,
    super_level_exact,
    super_level_lower,
)
from .errors import AtomViolation, InvalidExponents, UnsupportedKernel


# ---------------------------------------------------------------- source functions

@dataclass(frozen=True, eq=False)
class SourceFunction:
    """Piecewise constant f on the base ``[0, 2^j_max)^d`` with cells of side ``h``."""

    values: np.ndarray
    h: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim not in (1, 2) or len(set(v.shape)) != 1:
            raise ValueError("values must be a 1-d array or a square 2-d array")
        if not np.isfinite(v).all():
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.ndim

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def on_grid(cls, grid: DyadicGrid, values, refine: int = 0) -> "SourceFunction":
        v = np.asarray(values, dtype=float)
        n = (1 << grid.L) << refine
        if v.shape != (n,) * grid.d:
            raise ValueError(f"expected shape {(n,) * grid.d}, got {v.shape}")
        return cls(v, 2.0 ** (grid.j_min - refine))

    @classmethod
    def from_fn(cls, grid: DyadicGrid, fn, refine: int = 0) -> "SourceFunction":
        """Sample ``fn(points)`` at the source cell centres (trailing axis of length d)."""
        n = (1 << grid.L) << refine
        h = 2.0 ** (grid.j_min - refine)
        ax = (np.arange(n) + 0.5) * h
        pts = ax[:, None] if grid.d == 1 else np.stack(np.meshgrid(ax, ax, indexing="ij"), -1)
        return cls(np.asarray(fn(pts), dtype=float).reshape((n,) * grid.d), h)

    def refined(self, times: int = 1) -> "SourceFunction":
        v = self.values
        for ax in range(self.d):
            v = np.repeat(v, 1 << times, axis=ax)
        return SourceFunction(v, self.h / (1 << times))

    def lp(self, p: float) -> float:
        a = np.abs(self.values)
        if p == INF:
            return float(a.max())
        return float((np.sum(a ** p) * self.h ** self.d) ** (1.0 / p))

    def integral(self) -> float:
        return float(self.values.sum() * self.h ** self.d)

    def breakpoints(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h


def box_indicator(grid: DyadicGrid, lo, hi, value: float = 1.0, refine: int = 0) -> SourceFunction:
    """``value * 1_{[lo, hi)}`` (per axis); exact when lo, hi lie on the source mesh."""
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (grid.d,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (grid.d,))
    h = 2.0 ** (grid.j_min - refine)
    for a in np.concatenate([lo, hi]):
        if abs(a / h - round(a / h)) > 1e-9:
            raise ValueError(f"{a} is not on the source mesh of width {h}")
    return SourceFunction.from_fn(
        grid, lambda x: value * np.all((x >= lo) & (x < hi), axis=-1), refine)


# ---------------------------------------------------------------- kernels

@dataclass(frozen=True)
class Kernel:
    """``name`` is ``indicator_box``, ``decay`` or ``smooth_bump``; ``eps`` is used by decay."""

    name: str
    eps: float = 1.0

    def __post_init__(self):
        if self.name not in ("indicator_box", "decay", "smooth_bump"):
            raise UnsupportedKernel(f"unknown kernel {self.name!r}")
        if self.name == "decay" and not self.eps > 0:
            raise UnsupportedKernel("decay kernel needs eps > 0")

    def l1_norm(self, d: int) -> float:
        if self.name == "indicator_box":
            return 2.0 ** d
        if self.name == "smooth_bump":
            return 1.0
        e = self.eps
        return 2.0 / e if d == 1 else 2 * math.pi / (e * (1 + e))


def as_kernel(kernel) -> Kernel:
    if isinstance(kernel, Kernel):
        return kernel
    if isinstance(kernel, str):
        name, _, eps = kernel.partition(":")
        return Kernel(name, float(eps) if eps else 1.0)
    raise UnsupportedKernel(f"cannot interpret {kernel!r} as a kernel")


def bump(u: np.ndarray) -> np.ndarray:
    """``exp(-1 / (1 - u^2))`` on (-1, 1), normalised to unit integral."""
    return _bump_raw(u) / _bump_table()[2]


def _bump_raw(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    out[m] = np.exp(-1.0 / (1.0 - u[m] ** 2))
    return out


@lru_cache(maxsize=1)
def _bump_table(n: int = 1 << 16):
    u = np.linspace(-1.0, 1.0, n + 1)
    cdf = cumulative_trapezoid(_bump_raw(u), u, initial=0.0)
    return u, cdf / cdf[-1], float(cdf[-1])


def _antiderivative(kernel: Kernel, u: np.ndarray) -> np.ndarray:
    """Odd antiderivative of the one-dimensional profile."""
    if kernel.name == "indicator_box":
        return np.clip(u, -1.0, 1.0)
    if kernel.name == "decay":
        e = kernel.eps
        return np.sign(u) * (1.0 - (1.0 + np.abs(u)) ** (-e)) / e
    tu, tc, _ = _bump_table()
    return np.interp(u, tu, tc) - 0.5


def _jumps(f: SourceFunction) -> np.ndarray:
    v = np.pad(f.values, 1)
    D = np.diff(v, axis=0)
    if f.d == 2:
        D = np.diff(D, axis=1)
    return D


def _embed_jumps(grid, f, kernel, chunk=1 << 22):
    D = _jumps(f)
    x = f.breakpoints()
    out = []
    for s in grid.levels:
        ax, t = grid.centers(s)
        if f.d == 1:
            nz = np.flatnonzero(D)
            acc = np.zeros(ax.size)
            step = max(1, chunk // max(1, nz.size))
            for a in range(0, ax.size, step):
                K = _antiderivative(kernel, (ax[a:a + step, None] - x[None, nz]) / t)
                acc[a:a + step] = K @ D[nz]
            out.append(acc)
        else:
            rows = np.flatnonzero(np.any(D != 0, axis=1))
            cols = np.flatnonzero(np.any(D != 0, axis=0))
            K1 = _antiderivative(kernel, (ax[:, None] - x[None, rows]) / t)
            K2 = _antiderivative(kernel, (ax[:, None] - x[None, cols]) / t)
            out.append(K1 @ D[np.ix_(rows, cols)] @ K2.T)
    return out


def _embed_midpoint(grid, f, eps, sub, chunk=1 << 22):
    """Radial decay kernel in d = 2, ``sub^2`` midpoint nodes per source cell."""
    g = f.refined(int(math.log2(sub))) if sub > 1 else f
    pts = np.stack(np.meshgrid(*(np.arange(g.n) + 0.5,) * 2, indexing="ij"), -1) * g.h
    keep = g.values != 0
    z, w = pts[keep], g.values[keep] * g.h ** 2
    out = []
    for s in grid.levels:
        y = grid.center_points(s).reshape(-1, 2)
        _, t = grid.centers(s)
        acc = np.zeros(y.shape[0])
        step = max(1, chunk // max(1, z.shape[0]))
        for a in range(0, y.shape[0], step):
            r = np.sqrt(((y[a:a + step, None, :] - z[None]) ** 2).sum(-1))
            acc[a:a + step] = (t ** -2 * (1 + r / t) ** (-2 - eps)) @ w
        out.append(acc.reshape(grid.shape(s)))
    return out


@dataclass(frozen=True, eq=False)
class Embedding:
    """Signed cell values, ``|F|`` as a CellFunction and a quadrature error estimate."""

    signed: tuple
    F: CellFunction
    error: float
    refine: int = field(default=1)


def embed_detailed(f: SourceFunction, kernel, grid: DyadicGrid, *, refine: int = 2) -> Embedding:
    kernel = as_kernel(kernel)
    if f.d != grid.d:
        raise ValueError("source and grid dimensions differ")
    if abs(f.n * f.h - grid.side) > 1e-9 * grid.side:
        raise ValueError("source function must cover the base of the grid")
    if kernel.name != "smooth_bump" and (f.values < 0).any():
        raise ValueError("f must be nonnegative for this kernel")
    if kernel.name == "decay" and grid.d == 2:
        coarse = _embed_midpoint(grid, f, kernel.eps, refine)
        fine = _embed_midpoint(grid, f, kernel.eps, 2 * refine)
        err = max(float(np.abs(a - b).max()) for a, b in zip(fine, coarse)) / 3.0
        vals, used = fine, 2 * refine
    else:
        vals, err, used = _embed_jumps(grid, f, kernel), 0.0, 1
    vals = tuple(np.asarray(v).reshape(grid.shape(s)) for s, v in enumerate(vals))
    F = CellFunction(grid, tuple(np.abs(v) for v in vals))
    return Embedding(vals, F, err, used)


def embed(f: SourceFunction, kernel, grid: DyadicGrid, *, refine: int = 2) -> CellFunction:
    """``|F_phi(f)|`` at the cell centres."""
    return embed_detailed(f, kernel, grid, refine=refine).F


def embed_sup(f: SourceFunction, eps: float, grid: DyadicGrid) -> CellFunction:
    """The supremal kernel ``t^{-d} (1 + |y - z| / t)^{-d - eps}``."""
    if (f.values < 0).any():
        raise ValueError("f must be nonnegative")
    return embed(f, Kernel("decay", eps), grid)


# ---------------------------------------------------------------- pointwise bounds

def maximal_function(f: SourceFunction, y: np.ndarray) -> np.ndarray:
    """Exact centred maximal function of |f| at points y (d = 1).

    The average over ``(y - r, y + r)`` is monotone in r between the radii at which an
    endpoint crosses a breakpoint, so the sup is over those radii and ``r -> 0``.
    """
    if f.d != 1:
        raise ValueError("maximal_function supports d = 1 only")
    a = np.abs(f.values)
    x = f.breakpoints()
    P = np.concatenate([[0.0], np.cumsum(a) * f.h])

    def prim(z):
        z = np.clip(z, x[0], x[-1])
        i = np.clip(np.floor(z / f.h).astype(int), 0, f.n - 1)
        return P[i] + a[i] * (z - x[i])

    y = np.asarray(y, dtype=float).reshape(-1)
    out = np.zeros(y.size)
    for k, yk in enumerate(y):
        r = np.abs(x - yk)
        r = r[r > 0]
        avg = (prim(yk + r) - prim(yk - r)) / (2 * r)
        i = min(max(int(math.floor(yk / f.h)), 0), f.n - 1)
        out[k] = max(float(avg.max()) if avg.size else 0.0, float(a[i]))
    return out


def young_constant(d: int, eps: float, p: float) -> float:
    """``||phi||_{p'}`` for ``phi(u) = (1 + |u|)^{-d - eps}``."""
    if p == 1:
        return 1.0
    q = INF if p == INF else p / (p - 1.0)
    if q == INF:
        return 1.0
    a = (d + eps) * q
    if d == 1:
        return (2.0 / (a - 1.0)) ** (1.0 / q)
    return (2 * math.pi * (1.0 / (a - 2.0) - 1.0 / (a - 1.0))) ** (1.0 / q)


@dataclass(frozen=True)
class PointwiseCheck:
    maximal_ratio: float  # max F / (||phi||_1 Mf), must be <= 1
    young_ratio: float  # max F / (t^{-d/p} ||f||_p ||phi||_{p'}), must be <= 1

    @property
    def ok(self) -> bool:
        return self.maximal_ratio <= 1 + 1e-9 and self.young_ratio <= 1 + 1e-9


def pointwise_bounds(f: SourceFunction, grid: DyadicGrid, eps: float = 1.0, p: float = 2.0,
                     *, max_points: int = 64) -> PointwiseCheck:
    """Spot-check the maximal and Young bounds for the supremal kernel on every level."""
    F = embed_sup(f, eps, grid)
    C1 = Kernel("decay", eps).l1_norm(grid.d)
    fp = f.lp(p)
    mr = yr = 0.0
    for s in grid.levels:
        ax, t = grid.centers(s)
        v = F.values[s]
        if grid.d == 1:
            idx = np.unique(np.linspace(0, ax.size - 1, min(ax.size, max_points)).astype(int))
            M = maximal_function(f, ax[idx])
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(M > 0, v[idx] / (C1 * M), np.where(v[idx] > 0, INF, 0.0))
            mr = max(mr, float(q.max()))
        bound = t ** (-grid.d / p) * fp * young_constant(grid.d, eps, p)
        if bound > 0:
            yr = max(yr, float(v.max()) / bound)
    return PointwiseCheck(mr, yr)


# ---------------------------------------------------------------- classification

def classify_embedding(p: float, q: float, r: float) -> str:
    """``strong``, ``weak`` or ``none`` for ``t^{d/p - d/q} F(f)`` from L^p to L^q(l^r)."""
    if not (1 <= p <= INF and 1 <= q <= INF and 0 < r <= INF):
        raise InvalidExponents(f"need 1 <= p, q <= inf and r > 0, got {(p, q, r)}")
    if 1 < p < q:
        return "strong"
    if 1 < p == q and r == INF:
        return "strong"
    if p == 1 and q == INF:
        return "strong"
    if p == 1 and 1 < q < INF:
        return "weak"
    if p == q == 1 and r == INF:
        return "weak"
    return "none"


# ---------------------------------------------------------------- type estimates

def _centred(grid: DyadicGrid, fn):
    c = grid.side / 2.0
    return lambda x: fn(x - c)


def default_suite(d: int = 1, seed: int = 0) -> dict:
    """Named source profiles ``x -> f(x)`` in coordinates centred on the base."""
    rng = np.random.default_rng(seed)
    suite = {}
    for w in (0.5, 1.0, 2.0):
        suite[f"box_{w:g}"] = (lambda w: lambda x: np.all(np.abs(x + 0.0) < w, axis=-1)
                               .astype(float))(w)
    for w in (1.0, 2.0):
        suite[f"tent_{w:g}"] = (lambda w: lambda x: np.clip(
            1 - np.sqrt((x ** 2).sum(-1)) / w, 0, None))(w)
    for k in range(2):
        lo = rng.integers(-8, 8, size=(4, d)) / 4.0
        wid = rng.integers(1, 5, size=(4, 1)) / 4.0
        amp = rng.uniform(0.5, 2.0, size=4)
        suite[f"sparse_{k}"] = (lambda lo, wid, amp: lambda x: sum(
            a * np.all((x >= l) & (x < l + w), axis=-1) for l, w, a in zip(lo, wid, amp)))(
            lo, wid, amp)
    return suite


@dataclass(frozen=True)
class TypeRecord:
    member: str
    height_log2: int
    strong: float
    weak: float
    classification: str


def _ratio(num: float, den: float) -> float:
    if num == 0:
        return 0.0
    return num / den if den > 0 else INF


def type_estimate_report(p: float, q: float, r: float, suite: dict | None = None, *,
                         d: int = 1, j_min: int = -2, heights=(4, 5, 6, 7),
                         eps: float = 1.0, levels_per_octave: int = 4) -> list:
    """Strong and weak ratios of ``t^{d/p - d/q} F(f)`` over ``||f||_p`` across heights."""
    cls = classify_embedding(p, q, r)
    suite = default_suite(d) if suite is None else suite
    a = d / p - (0.0 if q == INF else d / q)
    out = []
    for jm in heights:
        grid = build_grid(d, j_min, jm)
        for name, fn in suite.items():
            f = SourceFunction.from_fn(grid, _centred(grid, fn))
            fp = f.lp(p)
            G = scale_map(grid, embed_sup(f, eps, grid), a)
            if q == INF:
                s = w = sup_size(G, r)
            else:
                s = outer_quasinorm(grid, G, q, r, mode="integral",
                                    levels_per_octave=levels_per_octave).upper
                w = outer_weak_quasinorm(grid, G, q, r, levels_per_octave=levels_per_octave).upper
            out.append(TypeRecord(name, jm, _ratio(s, fp), _ratio(w, fp), cls))
    return out


def stability(records: list, attr: str) -> dict:
    """Per member, max over min of the ratio across the height sweep."""
    by = {}
    for rec in records:
        by.setdefault(rec.member, []).append(getattr(rec, attr))
    out = {}
    for k, v in by.items():
        v = np.asarray(v)
        out[k] = INF if not np.isfinite(v).all() or v.min() <= 0 else float(v.max() / v.min())
    return out


# ---------------------------------------------------------------- counterexamples

@dataclass(frozen=True)
class ChainRecord:
    u: float
    lam: float  # size of G restricted above height u on E_{2u}
    scaled: float  # lam * u^{d/q}
    mu_exact: float
    mu_lower: float
    bound: float  # u^d

    @property
    def ok(self) -> bool:
        return min(self.mu_exact, self.mu_lower) >= self.bound * (1 - 1e-12)


@dataclass(frozen=True)
class DivergenceRecord:
    height_log2: int
    norm: Bracket
    chain_bound: float  # lower bound on ||G||^q from the E_{2u} chain


@dataclass(frozen=True)
class Divergence:
    chain: list
    growth: list
    variant: list  # (j_min, size) of the small-scale variant


def _unit_box_source(grid: DyadicGrid) -> SourceFunction:
    c = grid.side / 2.0
    return box_indicator(grid, c - 1.0, c + 1.0)


def _chain(grid, G, q, r, shrink=1e-12):
    d = grid.d
    c = grid.side / 2.0
    recs = []
    j = 1
    while 2.0 ** j <= c:
        u = 2.0 ** (j - 1)
        box = Box(j, (int(c / 2.0 ** j),) * d)
        s = grid.level_of(box)
        keep = [np.zeros(grid.shape(k), dtype=bool) for k in grid.levels]
        keep[s][box.idx] = True
        lam = size_box(grid, G.restrict(keep), box, r)
        ell = lam * (1 - shrink)
        recs.append(ChainRecord(u, lam, lam * u ** (d / q),
                                super_level_exact(grid, G, r, ell),
                                super_level_lower(grid, G, r, ell), bound=u ** d))
        j += 1
    return recs


def _chain_bound(recs, q, d):
    """``sum_u (2u)^d (lam_u^q - lam_{2u}^q)``: m >= (2u)^d on ``[lam_{2u}, lam_u)``."""
    tot = 0.0
    lams = [x.lam for x in recs] + [0.0]
    for k, rec in enumerate(recs):
        if lams[k] > lams[k + 1]:
            tot += (2 * rec.u) ** d * (lams[k] ** q - lams[k + 1] ** q)
    return tot


def counterexample_divergence(q: float = 2.0, r: float = 2.0, *, d: int = 1,
                              heights=range(3, 9), j_min: int = 0, p_variant: float = 2.0,
                              variant_j_mins=(-3, -4, -5, -6, -7),
                              levels_per_octave: int = 4) -> Divergence:
    """Super level chain, truncated norm growth and the small-scale variant.

    ``f = phi = 1_{(-1,1)^d}`` centred on the base; ``G = t^{d - d/q} F_phi(f)``.  The
    chain uses the top cell of ``E_{2u}``, the box with corner at the centre of f.
    The variant measures ``l^r(t^{d/p - d/q} F_phi(f))`` on a box of side 1/4 at the
    centre as the finest scale shrinks, for ``q <= p``.
    """
    if not (1 <= q < INF and 0 < r <= INF):
        raise InvalidExponents("need 1 <= q < inf and r > 0")
    kern = Kernel("indicator_box")
    chain, growth = [], []
    for jm in heights:
        grid = build_grid(d, j_min, jm)
        G = scale_map(grid, embed(_unit_box_source(grid), kern, grid), d - d / q)
        recs = _chain(grid, G, q, r)
        if jm == max(heights):
            chain = recs
        nb = outer_quasinorm(grid, G, q, r, mode="integral", levels_per_octave=levels_per_octave)
        growth.append(DivergenceRecord(jm, nb, _chain_bound(recs, q, d)))
    variant = []
    if q <= p_variant:
        a = d / p_variant - d / q
        for jn in variant_j_mins:
            grid = build_grid(d, jn, 3)
            G = scale_map(grid, embed(_unit_box_source(grid), kern, grid), a)
            c = grid.side / 2.0
            box = Box(-2, (int(c * 4),) * d)
            variant.append((jn, size_box(grid, G, box, r)))
    return Divergence(chain, growth, variant)


# ---------------------------------------------------------------- H^1 atoms

def validate_atom(f: SourceFunction, lo, hi, *, tol: float = 1e-9) -> None:
    """Raise AtomViolation unless f is supported in the cube, has mean zero and
    ``||f||_inf <= |B|^{-1}``."""
    lo = np.broadcast_to(np.asarray(lo, float), (f.d,))
    hi = np.broadcast_to(np.asarray(hi, float), (f.d,))
    vol = float(np.prod(hi - lo))
    ax = (np.arange(f.n) + 0.5) * f.h
    pts = ax[:, None] if f.d == 1 else np.stack(np.meshgrid(ax, ax, indexing="ij"), -1)
    inside = np.all((pts >= lo) & (pts < hi), axis=-1)
    if np.any(f.values[~inside] != 0):
        raise AtomViolation("atom is not supported in its cube")
    if abs(f.integral()) > tol * max(1.0, float(np.abs(f.values).sum() * f.h ** f.d)):
        raise AtomViolation(f"atom has nonzero mean {f.integral()!r}")
    if np.abs(f.values).max() > (1 + tol) / vol:
        raise AtomViolation("atom exceeds the |B|^{-1} size bound")


def halves_atom(grid: DyadicGrid, j: int, centre=None) -> tuple:
    """``|B|^{-1} (1_{left half} - 1_{right half})`` on the cube of side ``2^j``."""
    c = grid.side / 2.0 if centre is None else centre
    h = 2.0 ** j
    vol = h ** grid.d

    def fn(x):
        inside = np.all((x >= c - h / 2) & (x < c + h / 2), axis=-1)
        return np.where(inside, np.where(x[..., 0] < c, 1.0, -1.0) / vol, 0.0)

    return SourceFunction.from_fn(grid, fn), c - h / 2, c + h / 2


@dataclass(frozen=True)
class AtomRecord:
    j: int
    norm: Bracket
    slope: float
    decay_constant: float  # max m(lambda) lambda^{d/(d+1)} / |B|^{1/(d+1)}
    sup_times_volume: float  # sup |F| |B|
    above_threshold: float  # m just above sup |F|, must be 0


def h1_atom_check(j: int, *, grid: DyadicGrid | None = None, f: SourceFunction | None = None,
                  fit_octaves=(2, 8), levels_per_octave: int = 4) -> AtomRecord:
    """L^1(l^inf) bracket and level-set decay of ``F_phi`` of an atom on a cube of side 2^j."""
    grid = grid or build_grid(1, -6, 10)
    if f is None:
        f, lo, hi = halves_atom(grid, j)
    else:
        c = grid.side / 2.0
        lo, hi = c - 2.0 ** (j - 1), c + 2.0 ** (j - 1)
    validate_atom(f, lo, hi)
    d = grid.d
    vol = 2.0 ** (j * d)
    F = embed(f, Kernel("smooth_bump"), grid)
    norm = outer_quasinorm(grid, F, 1.0, INF, mode="integral", levels_per_octave=levels_per_octave)
    lams = np.array([2.0 ** -k / vol for k in np.arange(fit_octaves[0], fit_octaves[1] + 0.5, 0.5)])
    ms = np.array([super_level_exact(grid, F, INF, lam) for lam in lams])
    pos = ms > 0
    slope = float(np.polyfit(np.log(lams[pos]), np.log(ms[pos]), 1)[0]) if pos.sum() >= 2 else 0.0
    dc = float((ms * lams ** (d / (d + 1))).max() / vol ** (1 / (d + 1)))
    top = F.sup()
    above = super_level_exact(grid, F, INF, top * (1 + 1e-9)) if top > 0 else 0.0
    return AtomRecord(j, norm, slope, dc, top * vol, above)
