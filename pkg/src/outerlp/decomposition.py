"""Greedy level decompositions, dual witnesses, duality gaps and the chain family.

The chain family lives on dyadic subintervals of [0, 1]: generators are the chains
from each minimal interval up to the root.  Its L^1(l^r) quasi-norm fails to be
comparable to a norm uniformly in the depth once r > 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DepthTooLarge, NotInLinf, UnsupportedExponents, InvalidExponents
from .finite import (
    INF,
    FiniteOuterSpace,
    Generators,
    as_values,
    build_space,
    linf_quasinorm,
    lp_quasinorm,
    restrict,
    size_table,
    subset_sums,
    super_level_profile,
)


def conjugate(p: float) -> float:
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


# ---------------------------------------------------------------- greedy decomposition

@dataclass(frozen=True)
class Decomposition:
    """Selected sets ``levels[k] = E_k`` (bitmasks); absent keys are empty levels."""

    levels: dict
    k_max: int  # E_k is empty for every k >= k_max

    @property
    def k_min(self) -> int:
        return min(self.levels) if self.levels else self.k_max

    def F(self, k: int) -> int:
        m = 0
        for l, e in self.levels.items():
            if l >= k:
                m |= e
        return m

    def records(self, space: FiniteOuterSpace) -> list:
        return [{"k": k, "set": list(space.labels_of(e))} for k, e in sorted(self.levels.items(), reverse=True)]


def _deficits(space, v, r, removed, thr):
    """num(A \\ removed) - thr * mu(A) for every A (-inf where mu(A) = inf)."""
    h = np.where([(removed >> i) & 1 for i in range(space.n)], 0.0, v)
    num = subset_sums(space.weights * h ** r)
    mu = space.mu_table
    with np.errstate(invalid="ignore"):
        out = num - thr * mu
    return np.where(np.isinf(mu), -INF, out), num


def _residual_zero(space, v, removed):
    """True when f 1_{removed^c} vanishes on every set of finite measure."""
    for i in range(space.n):
        if not (removed >> i & 1) and v[i] > 0 and space.mu_table[1 << i] < INF:
            return False
    return True


def greedy_decompose_finite(space: FiniteOuterSpace, f, r) -> Decomposition:
    """Backward greedy recursion over dyadic levels ``2^k``.

    At each level the violating set of largest size (lowest mask on ties) is chosen,
    then violating sets are merged in ascending mask order until the residual norm is
    at most ``2^k``.
    """
    if not (0 < r < INF):
        raise InvalidExponents("greedy decomposition needs 0 < r < inf")
    v = as_values(space, f)
    norm = linf_quasinorm(space, v, r, method="enumerate")
    if norm == INF:
        raise NotInLinf("sup-size is infinite")
    if norm == 0:
        return Decomposition({}, 0)
    k_max = math.ceil(math.log2(norm))
    levels = {}
    F = 0
    k = k_max - 1
    while not _residual_zero(space, v, F):
        thr = 2.0 ** (k * r)
        d, num = _deficits(space, v, r, F, thr)
        if d.max() > 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(d > 0, num / space.mu_table, -1.0)
            a = int(np.argmax(ratio))
            while True:
                d, _ = _deficits(space, v, r, F | a, thr)
                bad = np.flatnonzero(d > 0)
                if bad.size == 0:
                    break
                a |= int(bad[0])
            levels[k] = a
            F |= a
        k -= 1
    return Decomposition(levels, k_max)


@dataclass
class DecompositionReport:
    a_ok: bool = True
    b_ok: bool = True
    c_ok: bool = True
    d_ok: bool = True
    c_emp: float = 0.0
    c_bound: float = 0.0
    witness: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.a_ok and self.b_ok and self.c_ok and self.d_ok


def optimal_covering_bound(r: float) -> float:
    """Constant in mu(E_k) <= C m(2^{k-1}) produced by the greedy argument."""
    return 2.0 ** (2 * r) / (2.0 ** r - 1.0)


def verify_decomposition(space: FiniteOuterSpace, f, r, dec: Decomposition) -> DecompositionReport:
    """Check the four level properties against exact super level measures."""
    v = as_values(space, f)
    rep = DecompositionReport(c_bound=optimal_covering_bound(r))
    prof = super_level_profile(space, v, r)
    mu = space.mu_table
    ks = range(dec.k_min - 1, dec.k_max + 1)
    for k in ks:
        Fk1 = dec.F(k + 1)
        e = dec.levels.get(k, 0)
        if e:
            h = np.where([(Fk1 >> i) & 1 for i in range(space.n)], 0.0, v)
            s = size_table(space, h, r)[e]
            if not s > 2.0 ** k:
                rep.a_ok = False
                rep.witness.setdefault("a", {"k": k, "set": list(space.labels_of(e)), "size": s})
        d, _ = _deficits(space, v, r, dec.F(k), 2.0 ** (k * r))
        if d.max() > 0:
            rep.b_ok = False
            a = int(np.flatnonzero(d > 0)[0])
            rep.witness.setdefault("b", {"k": k, "set": list(space.labels_of(a))})
        m_k = prof(2.0 ** k)
        tail = sum(mu[el] for l, el in dec.levels.items() if l >= k)
        if m_k > tail * (1 + 1e-12):
            rep.c_ok = False
            rep.witness.setdefault("c", {"k": k, "lambda": 2.0 ** k, "m": m_k, "sum": tail})
        if e:
            m_prev = prof(2.0 ** (k - 1))
            c = mu[e] / m_prev if m_prev > 0 else INF
            rep.c_emp = max(rep.c_emp, c)
    if not _residual_zero(space, v, dec.F(dec.k_min)):
        rep.b_ok = False
        rep.witness.setdefault("b", {"k": "bottom", "set": list(space.labels_of(space.full & ~dec.F(dec.k_min)))})
    if prof.values[0] > sum(mu[e] for e in dec.levels.values()) * (1 + 1e-12):
        rep.c_ok = False
        rep.witness.setdefault("c", {"k": "bottom", "m": prof.values[0]})
    rep.d_ok = rep.c_emp <= rep.c_bound * (1 + 1e-12)
    return rep


# ---------------------------------------------------------------- dual witnesses

@dataclass(frozen=True)
class DualWitness:
    g: np.ndarray
    case_tag: str
    witness_set: int | None = None


def dual_witness(space: FiniteOuterSpace, f, p, r, dec: Decomposition | None = None) -> DualWitness:
    """Candidate dual function built from the level decomposition (or an extremal set)."""
    v = as_values(space, f)
    if p == 1 and r > 1:
        raise UnsupportedExponents("no uniform dual witness for p = 1, r > 1")
    if p == INF and r == INF:
        i = int(np.argmax(v))
        g = np.zeros(space.n)
        if v[i] > 0:
            g[i] = 1.0
        return DualWitness(g, "P_inf_R_inf", 1 << i)
    if r == INF:
        raise UnsupportedExponents("finite dual witness for r = inf, p < inf is not available")
    if p == INF:
        s = size_table(space, v, r)
        best, e = 0.0, 0
        for gmask, _ in space.generators or ((int(np.argmax(s)), None),):
            if s[gmask] > best:
                best, e = s[gmask], gmask
        inside = np.array([(e >> i) & 1 for i in range(space.n)], dtype=bool)
        g = np.where(inside & (v > 0), v ** (r - 1) if r != 1 else 1.0, 0.0)
        return DualWitness(g, "P_inf_R_finite", e)
    if dec is None:
        dec = greedy_decompose_finite(space, v, r)
    g = np.zeros(space.n)
    for k, e in dec.levels.items():
        part = e & ~dec.F(k + 1)
        for i in range(space.n):
            if part >> i & 1 and v[i] > 0:
                g[i] = 2.0 ** (k * (p - r)) * v[i] ** (r - 1)
    return DualWitness(g, "P_finite_R_finite")


@dataclass(frozen=True)
class DualityGap:
    norm: float
    pairing: float
    g_norm: float
    lower: float  # pairing of f with the normalized witness
    upper: float  # 2 ||f|| from outer Hoelder
    ratio: float  # norm / lower

    @property
    def holder_ok(self) -> bool:
        return self.lower <= self.upper * (1 + 1e-9)


def duality_gap(space: FiniteOuterSpace, f, p, r) -> DualityGap:
    """Compare ``||f||_{L^p(l^r)}`` with its pairing against the normalized dual witness."""
    if isinstance(space, ChainSpace):
        if p == 1 and r > 1 and np.array_equal(as_values(space.space, f), space.f_m):
            return chain_duality(space.m, r)
        space = space.space
    v = as_values(space, f)
    in_range = (1 < p <= INF and 1 <= r < INF) or (p == r and p in (1, INF))
    if not in_range:
        raise UnsupportedExponents(f"(p, r) = ({p}, {r}) is outside the duality range")
    norm = lp_quasinorm(space, v, p, r)
    if norm == 0:
        return DualityGap(0.0, 0.0, 0.0, 0.0, 0.0, 1.0)
    w = dual_witness(space, v, p, r)
    pairing = float(np.sum(space.weights * v * w.g))
    gn = lp_quasinorm(space, w.g, conjugate(p), conjugate(r))
    lower = pairing / gn if gn > 0 else 0.0
    return DualityGap(norm, pairing, gn, lower, 2.0 * norm, norm / lower if lower > 0 else INF)


# ---------------------------------------------------------------- chain family

MAX_CHAIN_DEPTH = 14


@dataclass(frozen=True, eq=False)
class ChainSpace:
    """Dyadic intervals of [0,1] of length >= 2^-m; one chain generator per leaf."""

    m: int
    space: FiniteOuterSpace
    f_m: np.ndarray
    chains: tuple  # bitmask of each chain, leaves left to right

    def f_I(self, i: int) -> np.ndarray:
        e = self.chains[i]
        return np.array([(e >> x) & 1 for x in range(self.space.n)], dtype=float)


def _interval_id(level: int, idx: int) -> int:
    # heap order: root 0, children of node q are 2q+1, 2q+2
    return (1 << level) - 1 + idx


def counterexample_space(m: int) -> ChainSpace:
    if not 1 <= m <= MAX_CHAIN_DEPTH:
        raise DepthTooLarge(f"chain depth must lie in 1..{MAX_CHAIN_DEPTH}, got {m}")
    n = (1 << (m + 1)) - 1
    labels = tuple((lvl, idx) for lvl in range(m + 1) for idx in range(1 << lvl))
    f = np.array([2.0 ** (m - lvl) for lvl, _ in labels])
    chains = []
    for leaf in range(1 << m):
        ids = [_interval_id(lvl, leaf >> (m - lvl)) for lvl in range(m + 1)]
        chains.append(sum(1 << i for i in ids))
    gens = tuple((c, 1.0) for c in chains)
    space = FiniteOuterSpace(labels, np.ones(n), generators=tuple(sorted(gens)))
    return ChainSpace(m, space, f, tuple(chains))


def _chain_cost(m: int, r: float, d: int) -> float:
    """Residual size^r of one chain after removing every interval of level <= d.

    Buying all chains through the level-``d`` intervals (``2^d`` of them) removes the
    top ``d+1`` levels; on any chain the remaining values are ``2^j`` for
    ``j = 0..m-d-1``.
    """
    if r == INF:
        return 2.0 ** (m - d - 1) if d < m else 0.0
    return float(sum(2.0 ** (j * r) for j in range(m - d)))


def chain_lhs(m: int, r: float) -> float:
    """Exact ``||f_m||_{L^1(l^r)}`` on the chain space.

    Optimal removals at level lambda buy ``2^d`` whole subtrees' chains for the least
    ``d`` whose residual chain sum fits under ``lambda^r``; ``m(lambda) = 2^d`` on each
    step.
    """
    total = 0.0
    for d in range(0, m + 1):
        hi = _chain_cost(m, r, d - 1)
        lo = _chain_cost(m, r, d)
        if r == INF:
            total += 2.0 ** d * (hi - lo)
        else:
            total += 2.0 ** d * (hi ** (1.0 / r) - lo ** (1.0 / r))
    return total


def counterexample_ratios(m: int, r: float):
    """``(lhs, rhs, ratio)`` with lhs = ||f_m||, rhs = sum over leaves of ||f_I||."""
    if not r > 1:
        raise InvalidExponents("the chain family needs r > 1")
    cs = counterexample_space(m)
    lhs = chain_lhs(m, r)
    chain0 = cs.chains[0]
    sub = restrict(cs.space, chain0)
    one = lp_quasinorm(sub, np.ones(sub.n), 1, r)
    rhs = float((1 << m) * one)
    return float(lhs), rhs, float(lhs / rhs)


def chain_duality(m: int, r: float) -> DualityGap:
    """Outer L^1(l^r) norm of f_m against its best pairing with L^inf(l^{r'}).

    ``g = 1`` meets every chain; a cover by k chains holds at most ``k (m + 1)``
    points, so ``||1||_{L^inf(l^{r'})} = (m + 1)^{1/r'}`` and the normalized pairing
    equals the sum over leaves of ``||f_I||``.
    """
    norm = chain_lhs(m, r)
    pairing = float((1 << m) * (m + 1))
    rc = conjugate(r)
    gn = 1.0 if rc == INF else float((m + 1) ** (1.0 / rc))
    lower = pairing / gn
    return DualityGap(norm, pairing, gn, lower, 2.0 * norm, norm / lower)
