"""Tent space functionals on the dyadic grid.

Cones ``|x - y| < alpha t`` and tents ``|x - y| < s - t`` test membership of a cell
through its centre ``(y, 0.75 * 2^j)``.  The conical functional integrates
``dy dt / t^{d+1}`` exactly per cell; the tent functional at ``p = inf`` uses the
``dt / t`` cell masses normalised by the volume of the ball ``B(x, s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import (
    INF,
    Box,
    Bracket,
    CellFunction,
    DyadicGrid,
    outer_quasinorm,
    scale_map,
)
from .errors import InvalidExponents, AtomViolation


def ball_volume(d: int, radius):
    return 2.0 * radius if d == 1 else math.pi * np.asarray(radius) ** 2


def _cells(grid: DyadicGrid, F: CellFunction, positive_only: bool = True):
    """Flattened centres ``(K, d)``, heights, levels and values of the cells of F."""
    ys, ts, ss, vs = [], [], [], []
    for s in grid.levels:
        v = F.values[s].reshape(-1)
        keep = v > 0 if positive_only else np.ones(v.size, dtype=bool)
        pts = grid.center_points(s).reshape(-1, grid.d)[keep]
        _, t = grid.centers(s)
        ys.append(pts)
        ts.append(np.full(pts.shape[0], t))
        ss.append(np.full(pts.shape[0], s))
        vs.append(v[keep])
    return np.concatenate(ys), np.concatenate(ts), np.concatenate(ss), np.concatenate(vs)


def _dist(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.sqrt(((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=-1))


def area_functional(grid: DyadicGrid, F: CellFunction, r: float, *, aperture: float = 1.0,
                    chunk: int = 512) -> np.ndarray:
    """``A_r(F)(x)`` at every finest base centre (flattened)."""
    xs = grid.base_points()
    y, t, _, v = _cells(grid, F)
    out = np.zeros(xs.shape[0])
    if v.size == 0:
        return out
    w = grid.cone_mass
    for a in range(0, xs.shape[0], chunk):
        inside = _dist(xs[a:a + chunk], y) < aperture * t[None, :]
        if r == INF:
            out[a:a + chunk] = np.where(inside, v[None, :], 0.0).max(axis=1)
        else:
            out[a:a + chunk] = (inside * (w * v ** r)[None, :]).sum(axis=1) ** (1.0 / r)
    return out


def tent_functional(grid: DyadicGrid, F: CellFunction, r: float, *, chunk: int = 256) -> np.ndarray:
    """``C_r(F)(x) = sup_s (|B(x,s)|^{-1} int_{T(x,s)} F^r dy dt/t)^{1/r}`` per base centre.

    A cell enters ``T(x, s)`` once ``s`` exceeds ``t + |x - y|``, so the supremum is
    attained just above one of these thresholds.
    """
    xs = grid.base_points()
    y, t, s, v = _cells(grid, F)
    out = np.zeros(xs.shape[0])
    if v.size == 0:
        return out
    if r == INF:
        out[:] = v.max()
        return out
    mass = np.array([grid.mass(int(k)) for k in s]) * v ** r
    for a in range(0, xs.shape[0], chunk):
        theta = t[None, :] + _dist(xs[a:a + chunk], y)
        order = np.argsort(theta, axis=1, kind="stable")
        th = np.take_along_axis(theta, order, axis=1)
        cum = np.cumsum(mass[order], axis=1)
        val = cum / ball_volume(grid.d, th)
        last = np.ones_like(th, dtype=bool)
        last[:, :-1] = th[:, 1:] != th[:, :-1]
        out[a:a + chunk] = np.where(last, val, 0.0).max(axis=1) ** (1.0 / r)
    return out


def tent_norm(grid: DyadicGrid, F: CellFunction, p: float, r: float, *, aperture: float = 1.0) -> float:
    """Discrete tent space norm ``||F||_{T^p_r}``."""
    if not (p > 0 and r > 0):
        raise InvalidExponents("p and r must be positive")
    if p == INF:
        return float(tent_functional(grid, F, r).max())
    A = area_functional(grid, F, r, aperture=aperture)
    h = 2.0 ** (grid.j_min * grid.d)
    return float((np.sum(A ** p) * h) ** (1.0 / p))


@dataclass(frozen=True)
class EquivalenceRatio:
    tent: float
    outer: Bracket
    ratio_low: float
    ratio_high: float


def equivalence_ratio(grid: DyadicGrid, F: CellFunction, p: float, r: float, *,
                      mode: str = "integral", levels_per_octave: int = 8) -> EquivalenceRatio:
    """Tent norm over the outer quasi-norm bracket endpoints (1 for F = 0)."""
    tn = tent_norm(grid, F, p, r)
    br = outer_quasinorm(grid, F, p, r, mode=mode, levels_per_octave=levels_per_octave)
    if br.upper == 0:
        return EquivalenceRatio(tn, br, 1.0, 1.0)
    return EquivalenceRatio(tn, br, tn / br.upper, tn / br.lower if br.lower > 0 else INF)


@dataclass(frozen=True)
class HLSResult:
    ratio: float
    numerator_upper: float
    denominator_lower: float


def hls_check(grid: DyadicGrid, F: CellFunction, p: float, q: float, r1: float, r2: float, *,
              levels_per_octave: int = 8) -> HLSResult:
    """``||t^{d/p - d/q} F||_{L^q(l^r2)}`` (upper) over ``||F||_{L^p(l^r1)}`` (lower)."""
    if not (0 < p < q <= INF and 0 < r2 <= r1 <= INF):
        raise InvalidExponents(f"need 0 < p < q <= inf and 0 < r2 <= r1, got {(p, q, r1, r2)}")
    a = grid.d / p - (0.0 if q == INF else grid.d / q)
    G = scale_map(grid, F, a)
    num = outer_quasinorm(grid, G, q, r2, mode="integral", levels_per_octave=levels_per_octave).upper
    den = outer_quasinorm(grid, F, p, r1, mode="integral", levels_per_octave=levels_per_octave).lower
    if num == 0:
        return HLSResult(0.0, 0.0, den)
    return HLSResult(num / den if den > 0 else INF, num, den)


# ---------------------------------------------------------------- atoms

def tent_region(grid: DyadicGrid, box: Box) -> list:
    """Cells with centre in the tent over the ball inscribed in ``box``'s base."""
    s_b = grid.level_of(box)
    h = 2.0 ** box.j
    c = (np.asarray(box.idx) + 0.5) * h
    rho = h / 2.0
    out = []
    for s in grid.levels:
        pts = grid.center_points(s)
        _, t = grid.centers(s)
        dist = np.sqrt(((pts - c) ** 2).sum(axis=-1))
        out.append(dist < rho - t)
    return out


def make_atom(grid: DyadicGrid, box: Box, r1: float, *, kind: str = "flat",
              rng: np.random.Generator | None = None) -> CellFunction:
    """Function supported in the tent over ``B`` with ``||a||_{T^{r1}_{r1}} = |B|^{1/r1 - 1}``."""
    region = tent_region(grid, box)
    if not any(m.any() for m in region):
        raise AtomViolation("tent over the ball contains no cell centre")
    if kind == "flat":
        vals = [m.astype(float) for m in region]
    elif kind == "random":
        rng = rng or np.random.default_rng(0)
        vals = [m * rng.random(m.shape) for m in region]
    else:
        raise ValueError(f"unknown atom kind {kind!r}")
    a = CellFunction(grid, tuple(vals))
    radius = 2.0 ** box.j / 2.0
    vol = float(ball_volume(grid.d, radius))
    target = vol ** ((0.0 if r1 == INF else 1.0 / r1) - 1.0)
    cur = tent_norm(grid, a, r1, r1)
    return a * (target / cur)


def atom_lemma_value(grid: DyadicGrid, a: CellFunction, q: float, r2: float, r1: float) -> float:
    """``||t^{d - d/q} a||_{T^q_{r2}}``; bounded by 1 for atoms when ``1 < q <= r2 <= r1``."""
    if not (1 < q <= r2 <= r1):
        raise InvalidExponents(f"need 1 < q <= r2 <= r1, got {(q, r2, r1)}")
    expo = grid.d - (0.0 if q == INF else grid.d / q)
    return tent_norm(grid, scale_map(grid, a, expo), q, r2)
