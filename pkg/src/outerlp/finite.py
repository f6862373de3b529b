"""Finite outer measure spaces, l^r sizes, super level measures and outer L^p quasi-norms.

Subsets of the ground set are encoded as integer bitmasks (bit ``i`` is point ``i``).
For spaces up to ``MAX_TABLE_POINTS`` points every set function is materialised as a
numpy table indexed by mask, which turns the exact infima over all subsets into
vectorised reductions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import (
    AxiomViolation,
    GeneratorLimitExceeded,
    InvalidExponents,
    NonPositiveWeight,
    SpaceTooLarge,
)

INF = math.inf
MAX_TABLE_POINTS = 22
MAX_EXHAUSTIVE_AXIOM_POINTS = 12
DEFAULT_NODE_BUDGET = 2_000_000
FEAS_RTOL = 1e-12  # relative slack in size <= lambda


@dataclass(frozen=True)
class Generators:
    """Pre-measure: a list of ``(subset, sigma)`` pairs, subsets given by point labels."""

    items: tuple

    def __init__(self, items):
        object.__setattr__(self, "items", tuple((tuple(s), float(v)) for s, v in items))


@dataclass(frozen=True)
class ExplicitTable:
    """Outer measure given by value on every subset (missing subsets are an error)."""

    values: tuple

    def __init__(self, values):
        if isinstance(values, dict):
            values = values.items()
        object.__setattr__(self, "values", tuple((tuple(s), float(v)) for s, v in values))


@dataclass(frozen=True, eq=False)
class FiniteOuterSpace:
    labels: tuple
    weights: np.ndarray
    generators: tuple | None = None  # ((mask, sigma), ...)
    table: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    @cached_property
    def _index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}

    def mask_of(self, subset) -> int:
        """Bitmask of a subset given as an int mask or an iterable of labels."""
        if isinstance(subset, (int, np.integer)):
            m = int(subset)
            if m < 0 or m > self.full:
                raise ValueError("mask outside the ground set")
            return m
        m = 0
        for lab in subset:
            m |= 1 << self._index[lab]
        return m

    def labels_of(self, mask: int) -> tuple:
        return tuple(self.labels[i] for i in range(self.n) if mask >> i & 1)

    @property
    def is_generated(self) -> bool:
        return self.generators is not None

    @cached_property
    def covered(self) -> int:
        """Mask of points lying in some set of finite measure."""
        if self.is_generated:
            m = 0
            for e, _ in self.generators:
                m |= e
            return m
        t = self.mu_table
        return sum(1 << i for i in range(self.n) if t[1 << i] < INF)

    @property
    def is_normalized(self) -> bool:
        """True when every singleton has strictly positive finite measure."""
        if self.covered != self.full:
            return False
        t = self.mu_table if self.n <= MAX_TABLE_POINTS else None
        return all((t[1 << i] if t is not None else outer_measure(self, 1 << i)) > 0
                   for i in range(self.n))

    @cached_property
    def mu_table(self) -> np.ndarray:
        if self.table is not None:
            return self.table
        _require_table(self.n)
        return cover_table(self.n, self.generators)


def _require_table(n: int):
    if n > MAX_TABLE_POINTS:
        raise SpaceTooLarge(f"{n} points exceeds the exact limit of {MAX_TABLE_POINTS}")


def _check_r(r):
    if not (r > 0):
        raise InvalidExponents(f"r must be positive, got {r}")


# ---------------------------------------------------------------- construction

def build_space(points, weights, measure_source, *, seed: int = 0,
                samples: int = 200_000) -> FiniteOuterSpace:
    """Validate and assemble a finite outer measure space.

    ``points`` is a sequence of hashable labels or an int ``n`` (labels ``0..n-1``).
    Explicit tables are checked exhaustively up to 12 points and by seeded random
    sampling beyond that.
    """
    labels = tuple(range(points)) if isinstance(points, int) else tuple(points)
    if not labels:
        raise ValueError("empty point set")
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate point labels")
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape != (len(labels),):
        raise ValueError("one weight per point required")
    if not np.all(w > 0) or not np.all(np.isfinite(w)):
        bad = [labels[i] for i in np.flatnonzero(~(w > 0) | ~np.isfinite(w))]
        raise NonPositiveWeight(f"weights must be positive and finite at {bad}")
    proto = FiniteOuterSpace(labels, w)
    if isinstance(measure_source, Generators):
        gens = {}
        for s, v in measure_source.items:
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"generator value must be positive and finite, got {v}")
            e = proto.mask_of(s)
            if e == 0:
                continue
            gens[e] = min(v, gens.get(e, INF))
        return FiniteOuterSpace(labels, w, generators=tuple(sorted(gens.items())))
    if isinstance(measure_source, ExplicitTable):
        n = len(labels)
        _require_table(n)
        t = np.full(1 << n, np.nan)
        for s, v in measure_source.values:
            if v < 0 or math.isnan(v):
                raise ValueError("table values must be nonnegative")
            t[proto.mask_of(s)] = v
        if np.isnan(t).any():
            missing = int(np.flatnonzero(np.isnan(t))[0])
            raise ValueError(f"table misses subset {proto.labels_of(missing)}")
        t.setflags(write=False)
        _validate_table(proto, t, seed=seed, samples=samples)
        return FiniteOuterSpace(labels, w, table=t)
    raise TypeError("measure_source must be Generators or ExplicitTable")


def _validate_table(space, t, *, seed, samples):
    n = space.n
    if t[0] != 0:
        raise AxiomViolation("empty-set", [()])
    masks = np.arange(1 << n)
    for i in range(n):
        lo = masks[(masks >> i & 1) == 0]
        bad = np.flatnonzero(t[lo] > t[lo | (1 << i)])
        if bad.size:
            a = int(lo[bad[0]])
            raise AxiomViolation("monotonicity", [space.labels_of(a), space.labels_of(a | 1 << i)])
    if n <= MAX_EXHAUSTIVE_AXIOM_POINTS:
        for a in range(1, 1 << n):
            bad = np.flatnonzero(t[a | masks] > t[a] + t)
            if bad.size:
                b = int(bad[0])
                raise AxiomViolation("subadditivity", [space.labels_of(a), space.labels_of(b)])
    else:
        rng = np.random.default_rng(seed)
        a = rng.integers(0, 1 << n, samples)
        b = rng.integers(0, 1 << n, samples)
        bad = np.flatnonzero(t[a | b] > t[a] + t[b])
        if bad.size:
            i = bad[0]
            raise AxiomViolation("subadditivity", [space.labels_of(int(a[i])), space.labels_of(int(b[i]))])


def restrict(space: FiniteOuterSpace, subset) -> FiniteOuterSpace:
    """Trace of a generated space on ``subset``: generators ``E & S`` with the same sigma.

    The outer measure of any set inside ``S`` is unchanged, so quasi-norms of functions
    supported on ``S`` may be evaluated on the (much smaller) restricted space.
    """
    if not space.is_generated:
        raise ValueError("restriction is implemented for generated spaces")
    s = space.mask_of(subset)
    idx = [i for i in range(space.n) if s >> i & 1]
    pos = {i: k for k, i in enumerate(idx)}
    gens = {}
    for e, v in space.generators:
        m = 0
        for i in idx:
            if e >> i & 1:
                m |= 1 << pos[i]
        if m:
            gens[m] = min(v, gens.get(m, INF))
    return FiniteOuterSpace(tuple(space.labels[i] for i in idx), space.weights[idx].copy(),
                            generators=tuple(sorted(gens.items())))


# ---------------------------------------------------------------- subset tables

def subset_sums(values) -> np.ndarray:
    """Table ``T[mask] = sum of values over the bits of mask``."""
    out = np.zeros(1, dtype=float)
    for v in np.asarray(values, dtype=float):
        out = np.concatenate([out, out + v])
    return out


def subset_max(values) -> np.ndarray:
    """Table ``T[mask] = max of values over the bits of mask`` (0 on the empty set)."""
    out = np.zeros(1, dtype=float)
    for v in np.asarray(values, dtype=float):
        out = np.concatenate([out, np.maximum(out, v)])
    return out


def submask_max(table: np.ndarray) -> np.ndarray:
    """Zeta transform for max: ``out[mask] = max over submasks B of table[B]``."""
    out = np.array(table, dtype=float, copy=True)
    n = int(out.size).bit_length() - 1
    for i in range(n):
        v = out.reshape(-1, 2, 1 << i)
        np.maximum(v[:, 1, :], v[:, 0, :], out=v[:, 1, :])
    return out


def cover_table(n: int, generators) -> np.ndarray:
    """Exact ``mu[mask]`` for every mask by dynamic programming over generators.

    After processing generators ``0..i`` the table holds the cheapest cover using
    only those generators; each generator is used at most once in an optimal
    cover, so one pass per generator is exact.
    """
    masks = np.arange(1 << n, dtype=np.int64)
    cost = np.full(1 << n, INF)
    cost[0] = 0.0
    for e, v in generators:
        np.minimum(cost, v + cost[masks & ~e], out=cost)
    cost.setflags(write=False)
    return cost


def _ratio(num, den):
    """num/den with the size conventions: 0 on den=inf, inf on den=0<num, 0 on 0/0."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    out = np.where(np.isinf(den), 0.0, out)
    out = np.where(num == 0, 0.0, out)
    out = np.where((den == 0) & (num > 0), INF, out)
    return out


def _root(x, r):
    if r == 1:
        return x
    return np.power(x, 1.0 / r)


# ---------------------------------------------------------------- outer measure

def outer_measure(space: FiniteOuterSpace, A, *, node_budget: int = DEFAULT_NODE_BUDGET) -> float:
    """Exact outer measure of ``A`` (0 on the empty set, inf when uncovered)."""
    a = space.mask_of(A)
    if a == 0:
        return 0.0
    if not space.is_generated:
        return float(space.table[a])
    if "mu_table" in space.__dict__:
        return float(space.__dict__["mu_table"][a])
    return optimal_cover(space, a, node_budget=node_budget)[0]


def optimal_cover(space: FiniteOuterSpace, A, *, node_budget: int = DEFAULT_NODE_BUDGET):
    """Branch and bound for the cheapest generator cover of ``A``.

    Returns ``(value, indices)`` where ``indices`` is the lexicographically smallest
    optimal subcollection (indices into ``space.generators``).  Branches on the
    lowest uncovered point; the admissible lower bound is 0 so pruning uses the
    incumbent only.
    """
    if not space.is_generated:
        raise ValueError("covers exist only for generated spaces")
    a = space.mask_of(A)
    if a == 0:
        return 0.0, ()
    if a & ~space.covered:
        return INF, None
    gens = space.generators
    by_point = {}
    for i in range(space.n):
        if a >> i & 1:
            by_point[i] = [g for g, (e, _) in enumerate(gens) if e >> i & 1]
    best = [INF, None]
    nodes = [0]
    tol = 1e-12

    def rec(uncovered, cost, chosen):
        nodes[0] += 1
        if nodes[0] > node_budget:
            raise GeneratorLimitExceeded(f"cover search exceeded {node_budget} nodes")
        if uncovered == 0:
            cand = tuple(sorted(chosen))
            if best[1] is None or cost < best[0] - tol * max(1.0, best[0]) or (
                    cost <= best[0] + tol * max(1.0, best[0]) and cand < best[1]):
                best[0], best[1] = cost, cand
            return
        low = (uncovered & -uncovered).bit_length() - 1
        for g in by_point[low]:
            e, v = gens[g]
            c = cost + v
            if c > best[0] + tol * max(1.0, best[0]):
                continue
            rec(uncovered & ~e, c, chosen + [g])

    rec(a, 0.0, [])
    return best[0], best[1]


# ---------------------------------------------------------------- sizes

def as_values(space: FiniteOuterSpace, f) -> np.ndarray:
    v = np.asarray(f, dtype=float).reshape(-1)
    if v.shape != (space.n,):
        raise ValueError(f"function needs {space.n} values, got {v.shape}")
    if np.isnan(v).any() or (v < 0).any():
        raise ValueError("functions must be nonnegative")
    return v


def size(space: FiniteOuterSpace, f, A, r) -> float:
    """l^r size of ``f`` on ``A``."""
    _check_r(r)
    v = as_values(space, f)
    a = space.mask_of(A)
    if a == 0:
        return 0.0
    idx = [i for i in range(space.n) if a >> i & 1]
    if r == INF:
        return float(v[idx].max())
    num = float(np.sum(space.weights[idx] * v[idx] ** r))
    return float(_root(_ratio(num, outer_measure(space, a)), r))


def size_table(space: FiniteOuterSpace, f, r) -> np.ndarray:
    """``size(f, mask, r)`` for every mask."""
    _check_r(r)
    v = as_values(space, f)
    _require_table(space.n)
    if r == INF:
        return subset_max(v)
    num = subset_sums(space.weights * v ** r)
    return _root(_ratio(num, space.mu_table), r)


def linf_quasinorm(space: FiniteOuterSpace, f, r, *, method: str = "auto") -> float:
    """sup over all subsets of the l^r size.

    ``method="generators"`` takes the sup over generators only (valid for generated
    spaces), ``"enumerate"`` over all ``2^n`` subsets; ``"auto"`` picks the former
    when available.
    """
    _check_r(r)
    v = as_values(space, f)
    if method == "auto":
        method = "generators" if space.is_generated else "enumerate"
    if r == INF:
        return float(v.max())
    if method == "enumerate":
        return float(size_table(space, v, r).max())
    if method != "generators":
        raise ValueError(f"unknown method {method!r}")
    if not space.is_generated:
        raise ValueError("generator reduction needs a generated space")
    best = 0.0
    for e, _ in space.generators:
        best = max(best, size(space, v, e, r))
    return best


def residual_norm_table(space: FiniteOuterSpace, f, r) -> np.ndarray:
    """``tau[mask] = ||f 1_{mask^c}||_{L^inf(l^r)}`` for every mask."""
    s = size_table(space, f, r)
    best_in = submask_max(s)
    return best_in[space.full ^ np.arange(1 << space.n)]


# ---------------------------------------------------------------- super level measure

def _deficit_table(space, v, r, lam):
    """num(B) - lam^r mu(B), with num shrunk by ``FEAS_RTOL`` so ties at lam count as feasible."""
    if r == INF:
        return subset_max(v) * (1 - FEAS_RTOL) - lam
    num = subset_sums(space.weights * v ** r) * (1 - FEAS_RTOL)
    mu = space.mu_table
    with np.errstate(invalid="ignore"):
        out = num - lam ** r * mu
    out = np.where(np.isinf(mu), -INF, out)
    return out


def super_level_measure(space: FiniteOuterSpace, f, r, lam, *, strategy: str = "subsets") -> float:
    """inf of mu(A) over A with ||f 1_{A^c}||_{L^inf(l^r)} <= lam.

    ``strategy="subsets"`` scans all ``2^n`` sets A; ``"subcollections"`` scans unions
    of generators, ranking each union by the sigma-sum of the subcollection.
    """
    _check_r(r)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    v = as_values(space, f)
    _require_table(space.n)
    if strategy == "subsets":
        worst = submask_max(_deficit_table(space, v, r, lam))
        feasible = worst[space.full ^ np.arange(1 << space.n)] <= 0
        return float(space.mu_table[feasible].min()) if feasible.any() else INF
    if strategy != "subcollections":
        raise ValueError(f"unknown strategy {strategy!r}")
    if not space.is_generated:
        raise ValueError("subcollection strategy needs a generated space")
    gens = space.generators
    if len(gens) > MAX_TABLE_POINTS:
        raise SpaceTooLarge(f"{len(gens)} generators exceeds the exact limit")
    unions = np.zeros(1, dtype=np.int64)
    costs = np.zeros(1)
    for e, s in gens:
        unions = np.concatenate([unions, unions | e])
        costs = np.concatenate([costs, costs + s])
    ok = np.ones(unions.size, dtype=bool)
    if r == INF:
        loose = space.full & ~space.covered
        if any(v[i] > lam for i in range(space.n) if loose >> i & 1):
            return INF
        vmax = subset_max(v) * (1 - FEAS_RTOL)
        for e, _ in gens:
            ok &= vmax[e & ~unions] <= lam
    else:
        num = subset_sums(space.weights * v ** r) * (1 - FEAS_RTOL)
        for e, _ in gens:
            ok &= num[e & ~unions] - lam ** r * outer_measure(space, e) <= 0
    return float(costs[ok].min()) if ok.any() else INF


# ---------------------------------------------------------------- quasi-norms

@dataclass(frozen=True)
class SuperLevelProfile:
    """Right-continuous step function: ``m(lam) = values[i]`` on ``[thresholds[i], thresholds[i+1])``.

    ``thresholds[0] == 0``; the last value is 0.
    """

    thresholds: np.ndarray
    values: np.ndarray

    def __call__(self, lam: float) -> float:
        i = int(np.searchsorted(self.thresholds, lam * (1 + FEAS_RTOL), side="right")) - 1
        return float(self.values[max(i, 0)])


def super_level_profile(space: FiniteOuterSpace, f, r) -> SuperLevelProfile:
    """Exact super level measure for every lambda at once.

    ``A`` is feasible at ``lam`` iff ``tau(A) <= lam`` where ``tau`` is the residual
    norm; so ``m(lam)`` is the running minimum of ``mu`` over sets sorted by ``tau``.
    """
    tau = residual_norm_table(space, f, r)
    mu = np.asarray(space.mu_table, dtype=float)
    order = np.lexsort((mu, tau))
    t, m = tau[order], np.minimum.accumulate(mu[order])
    keep = np.r_[t[1:] != t[:-1], True]
    t, m = t[keep], m[keep]
    if t[0] > 0:
        t, m = np.r_[0.0, t], np.r_[INF, m]
    return SuperLevelProfile(t, m)


def _layer_cake(prof: SuperLevelProfile, p: float) -> float:
    t, m = prof.thresholds, prof.values
    total = 0.0
    for i in range(len(t) - 1):
        if m[i] == 0:
            continue
        width = t[i + 1] ** p - t[i] ** p
        total += m[i] * width
    if m[-1] > 0:  # only when the last threshold is inf
        return INF
    return total


def lp_quasinorm(space: FiniteOuterSpace, f, p, r, *, mode: str = "integral") -> float:
    """Outer L^p(l^r) quasi-norm, exact.

    ``mode="integral"`` evaluates the layer cake integral over the exact breakpoints of
    the super level measure; ``mode="discrete"`` is the dyadic sum
    ``(sum_k 2^{kp} m(2^k))^{1/p}`` including its geometric tail below the smallest
    breakpoint.
    """
    _check_r(r)
    if p == INF:
        return linf_quasinorm(space, f, r)
    if not p > 0:
        raise InvalidExponents(f"p must be positive, got {p}")
    v = as_values(space, f)
    prof = super_level_profile(space, v, r)
    if mode == "integral":
        return _layer_cake(prof, p) ** (1.0 / p)
    if mode != "discrete":
        raise ValueError(f"unknown mode {mode!r}")
    top = prof.thresholds[-1]
    if top == 0:
        return 0.0
    if top == INF:
        return INF
    low = prof.thresholds[1]
    k_hi = math.ceil(math.log2(top))
    k_lo = math.floor(math.log2(low)) - 1
    total = 0.0
    for k in range(k_lo, k_hi + 1):
        mk = prof(2.0 ** k)
        if mk:
            total += 2.0 ** (k * p) * mk
    m0 = prof(2.0 ** k_lo)
    if m0:
        total += m0 * 2.0 ** (k_lo * p) / (2.0 ** p - 1.0)
    return total ** (1.0 / p)


def lpweak_quasinorm(space: FiniteOuterSpace, f, p, r) -> float:
    """Weak outer L^{p,inf}(l^r) quasi-norm, exact over the breakpoints."""
    _check_r(r)
    if p == INF:
        return linf_quasinorm(space, f, r)
    v = as_values(space, f)
    prof = super_level_profile(space, v, r)
    t, m = prof.thresholds, prof.values
    best = 0.0
    for i in range(len(t) - 1):
        if m[i] > 0:
            best = max(best, (t[i + 1] ** p) * m[i])
    if m[-1] > 0:
        return INF
    return best ** (1.0 / p)


def lp_classical(space: FiniteOuterSpace, f, p) -> float:
    """Plain L^p(X, omega) norm."""
    v = as_values(space, f)
    if p == INF:
        return float(v.max())
    return float(np.sum(space.weights * v ** p) ** (1.0 / p))
