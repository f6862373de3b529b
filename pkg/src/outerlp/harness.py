"""Experiment configuration, random instances and experiment runners.

Every experiment is a list of row-producing tasks evaluated in parameter-grid order,
followed by summary rows.  Rows are flat dicts; each carries ``passed`` and, where a
check can fail, a JSON ``witness`` sufficient to redo the check by hand.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction

import numpy as np

from . import decomposition as dec_mod
from . import dyadic as dy
from . import embedding as emb
from . import finite as fin
from . import tent as tn
from .errors import ConfigParse, SpaceTooLarge
from .io import encode

INF = math.inf
MAX_INSTANCE_SIZE = 20

COMMANDS = ("norms", "decompose", "duality", "counterexample", "tent-equivalence", "hls",
            "embed", "type-map", "h1-atom", "axioms-fuzz")


# ---------------------------------------------------------------- configuration

@dataclass(frozen=True)
class ValueSpec:
    """Dyadic rationals ``k / 2^denom_log2`` in ``[0, 2^K]``; ``zero_fraction`` of them 0."""

    K: int = 3
    denom_log2: int = 2
    zero_fraction: float = 0.25


@dataclass
class ExperimentConfig:
    command: str
    n: int | None = None
    seed: int = 0
    size: list | None = None
    generator_count: int | None = None
    values: ValueSpec = field(default_factory=ValueSpec)
    p: list | None = None
    q: list | None = None
    r: list | None = None
    m: list | None = None
    eps: list | None = None
    d: int = 1
    j: list | None = None
    space: str = "finite"
    tuples: list | None = None
    output: str | None = None
    format: str = "csv"
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigParse(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.format not in ("csv", "json"):
            raise ConfigParse(f"unknown format {self.format!r}")
        if self.space not in ("finite", "dyadic"):
            raise ConfigParse(f"unknown space {self.space!r}")
        if isinstance(self.values, dict):
            self.values = ValueSpec(**self.values)

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))


def parse_number(s) -> float:
    if isinstance(s, (int, float)):
        return float(s)
    s = str(s).strip()
    if s in ("inf", "oo", "∞"):
        return INF
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigParse(f"cannot parse number {s!r}") from exc


def parse_list(s, integer: bool = False) -> list:
    """``"2..10"`` (inclusive integer range), ``"2,4,inf"`` or ``"4/3"``."""
    if isinstance(s, (list, tuple)):
        out = [parse_number(x) for x in s]
    else:
        out = []
        for part in str(s).split(","):
            part = part.strip()
            if ".." in part:
                a, b = part.split("..")
                try:
                    out.extend(float(x) for x in range(int(a), int(b) + 1))
                except ValueError as exc:
                    raise ConfigParse(f"bad range {part!r}") from exc
            elif part:
                out.append(parse_number(part))
    if integer:
        if any(not float(x).is_integer() for x in out):
            raise ConfigParse(f"expected integers, got {s!r}")
        return [int(x) for x in out]
    return out


def parse_tuples(s) -> list:
    """``"2:2:2:2,4:4/3:2:2"`` into tuples of numbers."""
    if isinstance(s, (list, tuple)):
        return [tuple(parse_number(x) for x in t) for t in s]
    return [tuple(parse_number(x) for x in part.split(":")) for part in str(s).split(",") if part]


def config_from_dict(doc: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    extra = set(doc) - known
    if extra:
        raise ConfigParse(f"unknown config keys {sorted(extra)}")
    if "command" not in doc:
        raise ConfigParse("config needs a command")
    doc = dict(doc)
    for key in ("p", "q", "r", "eps"):
        if key in doc and doc[key] is not None:
            doc[key] = parse_list(doc[key])
    for key in ("size", "m", "j"):
        if key in doc and doc[key] is not None:
            doc[key] = parse_list(doc[key], integer=True)
    if doc.get("tuples") is not None:
        doc["tuples"] = parse_tuples(doc["tuples"])
    try:
        return ExperimentConfig(**doc)
    except TypeError as exc:
        raise ConfigParse(str(exc)) from exc


# ---------------------------------------------------------------- instances

def _dyadic(rng, shape, spec: ValueSpec, positive: bool = False) -> np.ndarray:
    den = 1 << spec.denom_log2
    top = (1 << spec.K) * den
    v = rng.integers(1 if positive else 0, top + 1, size=shape) / den
    if not positive and spec.zero_fraction > 0:
        v = np.where(rng.random(shape) < spec.zero_fraction, 0.0, v)
    return v.astype(float)


def generate_instance(seed: int, size: int, generator_count: int | None = None,
                      value_spec: ValueSpec = ValueSpec()):
    """Seeded random generated space and function; every point lies in a generator."""
    if not 1 <= size <= MAX_INSTANCE_SIZE:
        raise SpaceTooLarge(f"instance size must lie in 1..{MAX_INSTANCE_SIZE}, got {size}")
    rng = np.random.default_rng([seed, size])
    k = generator_count if generator_count is not None else int(rng.integers(1, size + 2))
    masks = []
    for _ in range(max(k, 1)):
        m = int(rng.integers(1, 1 << size))
        masks.append(m)
    cov = 0
    for m in masks:
        cov |= m
    for i in range(size):
        if not cov >> i & 1:
            j = int(rng.integers(0, len(masks)))
            masks[j] |= 1 << i
            cov |= 1 << i
    sig = _dyadic(rng, len(masks), value_spec, positive=True)
    w = _dyadic(rng, size, ValueSpec(1, value_spec.denom_log2, 0.0), positive=True)
    f = _dyadic(rng, size, value_spec)
    gens = fin.Generators([([i for i in range(size) if m >> i & 1], s) for m, s in zip(masks, sig)])
    return fin.build_space(size, w, gens), f


def second_function(seed: int, size: int, value_spec: ValueSpec = ValueSpec()) -> np.ndarray:
    rng = np.random.default_rng([seed, size, 1])
    return _dyadic(rng, size, value_spec)


def topology_hash(space: fin.FiniteOuterSpace, exact_limit: int = 6) -> str:
    """Isomorphism invariant of the point/generator incidence structure.

    Exact canonical form (minimum over point relabellings) up to ``exact_limit`` points,
    colour refinement on the incidence graph beyond; either way equal classes hash equally.
    """
    n = space.n
    masks = [m for m, _ in space.generators] if space.generators else []
    if n <= exact_limit:
        best = None
        for perm in itertools.permutations(range(n)):
            img = tuple(sorted(sum(1 << perm[i] for i in range(n) if m >> i & 1) for m in masks))
            if best is None or img < best:
                best = img
        return f"x{n}:" + ",".join(map(str, best))
    pc = [0] * n
    gc = [0] * len(masks)
    for _ in range(n + len(masks)):
        new_g = [hash((gc[g], tuple(sorted(pc[i] for i in range(n) if masks[g] >> i & 1))))
                 for g in range(len(masks))]
        new_p = [hash((pc[i], tuple(sorted(new_g[g] for g in range(len(masks)) if masks[g] >> i & 1))))
                 for i in range(n)]
        if len(set(new_p)) == len(set(pc)) and len(set(new_g)) == len(set(gc)):
            pc, gc = new_p, new_g
            break
        pc, gc = new_p, new_g
    return f"w{n}:{hash((tuple(sorted(pc)), tuple(sorted(gc)))) & 0xFFFFFFFFFFFF:x}"


def random_cell_function(grid: dy.DyadicGrid, rng, *, density: float = 0.3,
                         spec: ValueSpec = ValueSpec(K=2, denom_log2=2)) -> dy.CellFunction:
    vals = []
    for s in grid.levels:
        v = _dyadic(rng, grid.shape(s), replace(spec, zero_fraction=0.0))
        vals.append(np.where(rng.random(grid.shape(s)) < density, v, 0.0))
    return dy.CellFunction(grid, tuple(vals))


def profile_suite(n: int = 50, seed: int = 0) -> list:
    """Profiles ``(x, t) -> value`` on ``[0,1] x (0,1]``, sampled at rescaled cell centres.

    Each member is a sum of one to three pieces: a flat block, a smooth hump, or a
    thin layer near the bottom.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        parts = []
        for _ in range(int(rng.integers(1, 4))):
            kind = int(rng.integers(0, 3))
            c, w = rng.uniform(0.1, 0.9), rng.uniform(0.05, 0.4)
            h, a = rng.uniform(0.1, 1.0), rng.uniform(0.5, 4.0)
            parts.append((kind, c, w, h, a))
        out.append(tuple(parts))
    return out


def sample_profile(grid: dy.DyadicGrid, prof) -> dy.CellFunction:
    W = grid.side

    def fn(pts, t):
        x, tt = pts[..., 0] / W, t / W
        v = np.zeros(pts.shape[:-1])
        for kind, c, w, h, a in prof:
            if kind == 0:
                v = v + a * ((np.abs(x - c) < w) & (tt < h))
            elif kind == 1:
                v = v + a * np.exp(-((x - c) / w) ** 2) * np.exp(-tt / h)
            else:
                v = v + a * ((np.abs(x - c) < w) & (tt < h / 8))
        return v

    return dy.CellFunction.from_fn(grid, fn)


# ---------------------------------------------------------------- rows

@dataclass
class Experiment:
    tasks: list
    summarize: object = None  # rows -> list of summary rows


def _row(command, passed=True, witness=None, **cols) -> dict:
    out = {"command": command, "kind": cols.pop("kind", "row")}
    out.update(cols)
    out["passed"] = bool(passed)
    out["witness"] = json.dumps(encode(witness)) if witness else ""
    return out


def _sizes(cfg, default):
    return cfg.size if cfg.size else default


def _rel(a, b):
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


# ---------------------------------------------------------------- finite experiments

def _exp_axioms(cfg: ExperimentConfig) -> Experiment:
    n = cfg.n or 100
    sizes = _sizes(cfg, [8])

    def task(i):
        size = sizes[i % len(sizes)]
        seed = cfg.seed + i
        space, f = generate_instance(seed, size, cfg.generator_count, cfg.values)
        wit = {}
        try:
            tbl = space.mu_table
            fin.build_space(size, space.weights, fin.ExplicitTable(
                [(space.labels_of(a), float(tbl[a])) for a in range(1 << size)]))
            axioms = True
        except Exception as exc:  # AxiomViolation carries the witness
            axioms, wit["axioms"] = False, repr(exc)
        normalized = space.is_normalized
        vals = sorted(set(float(x) for x in f) | {0.0})
        lams = [x for x in vals if x > 0] + [(a + b) / 2 for a, b in zip(vals[:-1], vals[1:])]
        choquet = True
        for lam in lams:
            a = fin.super_level_measure(space, f, INF, lam)
            b = fin.outer_measure(space, sum(1 << i for i in range(size) if f[i] > lam))
            if a != b:
                choquet = False
                wit.setdefault("choquet", {"lambda": lam, "super_level": a, "level_set": b})
        strategies = True
        if size <= 8:
            for r in (1.0, 2.0):
                for lam in lams[:6]:
                    a = fin.super_level_measure(space, f, r, lam, strategy="subsets")
                    b = fin.super_level_measure(space, f, r, lam, strategy="subcollections")
                    if a != b:
                        strategies = False
                        wit.setdefault("strategies", {"r": r, "lambda": lam, "subsets": a,
                                                      "subcollections": b})
        ok = axioms and normalized and choquet and strategies
        return _row("axioms-fuzz", ok, wit, seed=seed, size=size,
                    generators=len(space.generators), topology=topology_hash(space),
                    axioms_ok=axioms, normalized_ok=normalized, choquet_ok=choquet,
                    strategies_ok=strategies)

    def summarize(rows):
        topo = len({r["topology"] for r in rows})
        return [_row("axioms-fuzz", all(r["passed"] for r in rows), kind="summary",
                     instances=len(rows), topologies=topo)]

    return Experiment([lambda i=i: task(i) for i in range(n)], summarize)


def _exp_norms(cfg: ExperimentConfig) -> Experiment:
    n = cfg.n or 50
    sizes = _sizes(cfg, [6])
    ps = cfg.p or [1.0, 2.0, 4.0]
    rs = cfg.r or [1.0, 2.0, INF]
    holder = cfg.tuples or [(2.0, 2.0, 2.0, 2.0), (4.0, 4 / 3, 2.0, 2.0), (INF, 1.0, INF, 1.0)]
    tol = cfg.tol("norms", 1e-9)

    def task(i):
        size = sizes[i % len(sizes)]
        seed = cfg.seed + i
        space, f = generate_instance(seed, size, cfg.generator_count, cfg.values)
        g = second_function(seed, size, cfg.values)
        out = {"seed": seed, "size": size}
        wit = {}
        ok = True
        for p, r in itertools.product(ps, rs):
            a = fin.lp_quasinorm(space, f, p, r)
            b = fin.lp_quasinorm(space, f, p, r, mode="discrete")
            w = fin.lpweak_quasinorm(space, f, p, r)
            lo = (1 - 2.0 ** -p) ** (1 / p) * b
            hi = (2.0 ** p - 1) ** (1 / p) * b
            good = w <= a * (1 + tol) and lo * (1 - tol) <= a <= hi * (1 + tol)
            out[f"norm_p{p:g}_r{r:g}"] = a
            if not good:
                ok = False
                wit.setdefault("norms", {"p": p, "r": r, "integral": a, "discrete": b, "weak": w})
        # log-convexity: m_r <= m_r1 + m_r2 at every level, so the p-th powers add
        for p in ps:
            n1, n2, nm = (fin.lp_quasinorm(space, f, p, r) for r in (1.0, INF, 2.0))
            if nm ** p > (n1 ** p + n2 ** p) * (1 + tol):
                ok = False
                wit.setdefault("log_convexity", {"p": p, "r1": n1, "r2": n2, "r": nm})
        worst = 0.0
        for p1, p2, r1, r2 in holder:
            p = 1 / (1 / p1 + 1 / p2)
            r = 1 / (1 / r1 + 1 / r2)
            lhs = fin.lp_quasinorm(space, f * g, p, r)
            rhs = fin.lp_quasinorm(space, f, p1, r1) * fin.lp_quasinorm(space, g, p2, r2)
            ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else INF)
            worst = max(worst, ratio)
            if ratio > 2 * (1 + tol):
                ok = False
                wit.setdefault("holder", {"exponents": [p1, p2, r1, r2], "lhs": lhs, "rhs": rhs,
                                          "f": f, "g": g})
        out["holder_ratio_max"] = worst
        for p in ps:
            c = fin.lp_classical(space, f, p)
            out[f"collapse_p{p:g}"] = fin.lp_quasinorm(space, f, p, p) / c if c > 0 else 1.0
        return _row("norms", ok, wit, **out)

    def summarize(rows):
        return [_row("norms", all(r["passed"] for r in rows), kind="summary", instances=len(rows),
                     holder_ratio_max=max((r["holder_ratio_max"] for r in rows), default=0.0))]

    return Experiment([lambda i=i: task(i) for i in range(n)], summarize)


def _exp_decompose_finite(cfg):
    n = cfg.n or 200
    sizes = _sizes(cfg, [8])
    rs = cfg.r or [1.0, 2.0]
    tasks = []
    for r in rs:
        for i in range(n):
            def task(i=i, r=r):
                size = sizes[i % len(sizes)]
                seed = cfg.seed + i
                space, f = generate_instance(seed, size, cfg.generator_count, cfg.values)
                dec = dec_mod.greedy_decompose_finite(space, f, r)
                rep = dec_mod.verify_decomposition(space, f, r, dec)
                return _row("decompose", rep.ok, rep.witness or None, space="finite", r=r,
                            seed=seed, size=size, a_ok=rep.a_ok, b_ok=rep.b_ok, c_ok=rep.c_ok,
                            d_ok=rep.d_ok, c_emp=rep.c_emp, c_bound=rep.c_bound,
                            levels=len(dec.levels))
            tasks.append(task)
    stab = cfg.tol("stabilization", 0.05)

    def summarize(rows):
        out = []
        for r in rs:
            cs = [x["c_emp"] for x in rows if x["r"] == r]
            run = np.maximum.accumulate(cs)
            half = run[len(run) // 2 - 1] if len(run) >= 2 else run[-1]
            drift = float(run[-1] / half - 1) if half > 0 else 0.0
            ok = all(x["passed"] for x in rows if x["r"] == r) and np.isfinite(run[-1]) \
                and drift < stab
            out.append(_row("decompose", ok, kind="summary", space="finite", r=r, instances=len(cs),
                            c_emp_max=float(run[-1]), c_emp_half=float(half), drift=drift))
        return out

    return Experiment(tasks, summarize)


def _exp_decompose_dyadic(cfg):
    n = cfg.n or 100
    Ls = cfg.j or [4, 5, 6, 7, 8]
    rs = cfg.r or [1.0, 2.0, INF]
    tasks = []
    for L in Ls:
        for i in range(n):
            def task(i=i, L=L):
                grid = dy.build_grid(cfg.d, 0, L)
                rng = np.random.default_rng([cfg.seed, L, i])
                F = random_cell_function(grid, rng)
                r = rs[i % len(rs)]
                dec = dy.greedy_decompose_dyadic(grid, F, r)
                rep = dy.verify_dyadic_decomposition(F, dec, exact_levels=True)
                wit = dict(rep.witness)
                return _row("decompose", rep.ok, wit or None, space="dyadic", d=cfg.d, L=L, r=r,
                            index=i, boxes=len(dec.selected), carleson=rep.carleson,
                            sparse_fraction=rep.sparse_fraction,
                            sparse_overlap=rep.sparse_overlap, c_cover=rep.c_cover,
                            c_opt=rep.c_opt, carleson_ok=rep.carleson_ok,
                            sparse_ok=rep.sparse_ok)
            tasks.append(task)

    def summarize(rows):
        return [_row("decompose", all(x["passed"] for x in rows), kind="summary", space="dyadic",
                     instances=len(rows), carleson_max=max(x["carleson"] for x in rows),
                     sparse_fraction_min=min(x["sparse_fraction"] for x in rows))]

    return Experiment(tasks, summarize)


def _exp_duality(cfg: ExperimentConfig) -> Experiment:
    n = cfg.n or 100
    sizes = _sizes(cfg, [4, 6, 8])
    pairs = cfg.tuples or ([(p, r) for p in cfg.p for r in (cfg.r or [1.0])] if cfg.p else
                           [(2.0, 1.0), (2.0, 2.0), (4.0, 2.0), (INF, 1.0)])
    spread = cfg.tol("duality_spread", 3.0)
    tasks = []
    for p, r in pairs:
        for size in sizes:
            for i in range(n):
                def task(i=i, p=p, r=r, size=size):
                    seed = cfg.seed + i
                    space, f = generate_instance(seed, size, cfg.generator_count, cfg.values)
                    gap = dec_mod.duality_gap(space, f, p, r)
                    c = 1.0 if gap.norm == 0 else gap.lower / gap.norm
                    wit = None if gap.holder_ok else {"f": f, "lower": gap.lower, "upper": gap.upper}
                    return _row("duality", gap.holder_ok, wit, p=p, r=r, size=size, seed=seed,
                                norm=gap.norm, lower=gap.lower, upper=gap.upper, ratio=gap.ratio,
                                c=c, holder_ok=gap.holder_ok)
                tasks.append(task)

    def summarize(rows):
        out = []
        for p, r in pairs:
            mins = {}
            for x in rows:
                if x["p"] == p and x["r"] == r:
                    mins[x["size"]] = min(mins.get(x["size"], INF), x["c"])
            lo, hi = min(mins.values()), max(mins.values())
            ok = lo > 0 and hi / lo <= spread and all(
                x["passed"] for x in rows if x["p"] == p and x["r"] == r)
            out.append(_row("duality", ok, kind="summary", p=p, r=r,
                            c_min_by_size=json.dumps(encode(mins)), c_min=lo,
                            spread=hi / lo if lo > 0 else INF,
                            ratio_max=max(x["ratio"] for x in rows if x["p"] == p and x["r"] == r)))
        return out

    return Experiment(tasks, summarize)


def _exp_counterexample(cfg: ExperimentConfig) -> Experiment:
    ms = cfg.m or list(range(1, 13))
    rs = cfg.r or [2.0, 4.0]
    tol = cfg.tol("rhs_rel", 1e-12)
    tasks = []
    for r in rs:
        for m in ms:
            def task(m=m, r=r):
                lhs, rhs, ratio = dec_mod.counterexample_ratios(m, r)
                rhs_exact = 2.0 ** m * (m + 1) ** (0.0 if r == INF else 1 / r)
                lhs_bound = 2.0 ** m * (m + 1) / 2
                ok_rhs = _rel(rhs, rhs_exact) <= tol
                ok_lhs = lhs >= lhs_bound * (1 - 1e-12)
                brute = None
                if m <= 3:
                    cs = dec_mod.counterexample_space(m)
                    brute = fin.lp_quasinorm(cs.space, cs.f_m, 1.0, r)
                ok_brute = brute is None or _rel(brute, lhs) <= 1e-12
                ok = ok_rhs and ok_lhs and ok_brute
                wit = None if ok else {"m": m, "r": r, "lhs": lhs, "rhs": rhs, "brute": brute}
                return _row("counterexample", ok, wit, m=m, r=r, lhs=lhs, rhs=rhs, ratio=ratio,
                            rhs_closed_form=rhs_exact, lhs_lower_bound=lhs_bound,
                            brute_force=brute if brute is not None else "")
            tasks.append(task)

    def summarize(rows):
        out = []
        for r in rs:
            sub = sorted((x for x in rows if x["r"] == r), key=lambda x: x["m"])
            rat = [x["ratio"] for x in sub if x["m"] >= 2]
            mono = all(b > a for a, b in zip(rat[:-1], rat[1:]))
            last = sub[-1]
            ok = all(x["passed"] for x in sub) and mono
            if r == 2.0 and last["m"] >= 12:
                ok = ok and last["ratio"] >= 1.8
            out.append(_row("counterexample", ok, kind="summary", r=r, m_max=last["m"],
                            ratio_at_m_max=last["ratio"], monotone=mono))
        return out

    return Experiment(tasks, summarize)


# ---------------------------------------------------------------- dyadic experiments

def _exp_tent(cfg: ExperimentConfig) -> Experiment:
    n = cfg.n or 50
    Ls = cfg.j or [4, 8]
    pairs = cfg.tuples or [(2.0, 2.0), (2.0, INF), (INF, 2.0), (1.0, INF)]
    suite = profile_suite(n, cfg.seed)
    tasks = []
    for p, r in pairs:
        for L in Ls:
            for i, prof in enumerate(suite):
                def task(p=p, r=r, L=L, i=i, prof=prof):
                    grid = dy.build_grid(cfg.d, 0, L)
                    F = sample_profile(grid, prof)
                    eq = tn.equivalence_ratio(grid, F, p, r)
                    mid = math.sqrt(eq.ratio_low * eq.ratio_high)
                    return _row("tent-equivalence", np.isfinite(mid) and mid > 0, None, p=p, r=r,
                                L=L, member=i, tent=eq.tent, outer_lower=eq.outer.lower,
                                outer_upper=eq.outer.upper, ratio_low=eq.ratio_low,
                                ratio_high=eq.ratio_high, ratio=mid)
                tasks.append(task)
    limit = cfg.tol("window_change", 2.0)

    def summarize(rows):
        out = []
        for p, r in pairs:
            win = {}
            for L in Ls:
                rat = [x["ratio"] for x in rows if x["p"] == p and x["r"] == r and x["L"] == L]
                win[L] = max(rat) / min(rat)
            change = max(win.values()) / min(win.values())
            ok = change < limit and all(x["passed"] for x in rows if x["p"] == p and x["r"] == r)
            out.append(_row("tent-equivalence", ok, kind="summary", p=p, r=r,
                            windows=json.dumps(encode(win)), window_change=change))
        return out

    return Experiment(tasks, summarize)


ATOM_EXPONENTS = ((INF, INF, INF), (2.0, 2.0, 2.0), (2.0, 2.0, INF), (4.0, 4.0, 4.0), (2.0, 4.0, INF))


def _exp_hls(cfg: ExperimentConfig) -> Experiment:
    n = cfg.n or 60
    Ls = cfg.j or [6]
    p, q, r1, r2 = (cfg.tuples or [(1.0, 2.0, 2.0, 1.0)])[0]
    atom_tol = cfg.tol("atom", 0.10)
    tasks = []
    for L in Ls:
        for i in range(n):
            def task(i=i, L=L):
                grid = dy.build_grid(cfg.d, 0, L)
                F = random_cell_function(grid, np.random.default_rng([cfg.seed, L, i]), density=0.2)
                res = tn.hls_check(grid, F, p, q, r1, r2)
                return _row("hls", np.isfinite(res.ratio), None, kind="random", L=L, member=i,
                            p=p, q=q, r1=r1, r2=r2, ratio=res.ratio,
                            numerator_upper=res.numerator_upper,
                            denominator_lower=res.denominator_lower)
            tasks.append(task)
    for L in Ls:
        for (aq, ar2, ar1) in ATOM_EXPONENTS:
            for s in range(2, L + 1):
                for kind in ("flat", "random"):
                    def task(L=L, aq=aq, ar2=ar2, ar1=ar1, s=s, kind=kind):
                        grid = dy.build_grid(cfg.d, 0, L)
                        box = dy.Box(s, (0,) * cfg.d)
                        a = tn.make_atom(grid, box, ar1, kind=kind,
                                         rng=np.random.default_rng([cfg.seed, s]))
                        v = tn.atom_lemma_value(grid, a, aq, ar2, ar1)
                        ok = v <= 1 + atom_tol
                        wit = None if ok else {"box": box.as_list(), "value": v}
                        return _row("hls", ok, wit, kind="atom", L=L, atom=kind, box_j=s,
                                    q=aq, r2=ar2, r1=ar1, value=v)
                    tasks.append(task)
    stab = cfg.tol("running_max", 0.25)

    def summarize(rows):
        rat = [x["ratio"] for x in rows if x["kind"] == "random"]
        run = np.maximum.accumulate(rat)
        half = run[len(run) // 2 - 1]
        drift = float(run[-1] / half - 1)
        atoms = [x for x in rows if x["kind"] == "atom"]
        ok = all(x["passed"] for x in rows) and drift <= stab
        return [_row("hls", ok, kind="summary", ratio_max=float(run[-1]), ratio_half=float(half),
                     drift=drift, atom_max=max(x["value"] for x in atoms))]

    return Experiment(tasks, summarize)


def _exp_embed(cfg: ExperimentConfig) -> Experiment:
    eps_list = cfg.eps or [0.5, 1.0, 2.0]
    ps = cfg.p or [1.0, 2.0, 4.0]
    qs = cfg.q or [2.0]
    rs = cfg.r or [2.0, INF]
    L = (cfg.j or [6])[0]
    tasks = []

    def exactness():
        grid = dy.build_grid(cfg.d, -2, L - 2)
        c = grid.side / 2
        one = emb.SourceFunction.from_fn(grid, lambda x: np.ones(x.shape[:-1]))
        E = emb.embed_detailed(one, "indicator_box", grid)
        interior = []
        for s in grid.levels:
            ax, t = grid.centers(s)
            m = (ax - t > 0) & (ax + t < grid.side)
            if m.any():
                v = E.signed[s][np.ix_(*(m,) * cfg.d)] if cfg.d == 2 else E.signed[s][m]
                interior.append(float(np.abs(v - 2.0 ** cfg.d).max()))
        box = emb.box_indicator(grid, c - 1.0, c + 1.0)
        a = emb.embed_detailed(box, "indicator_box", grid).signed
        b = emb.embed_detailed(box.refined(1), "indicator_box", grid).signed
        refine = max(float(np.abs(x - y).max()) for x, y in zip(a, b))
        low = INF
        for s in grid.levels:
            ax, t = grid.centers(s)
            if t >= 1:
                pts = grid.center_points(s)
                m = np.all(np.abs(pts - c) < t, axis=-1)
                if m.any():
                    low = min(low, float((a[s][m] * t ** cfg.d).min()))
        ok = max(interior) == 0 and refine == 0 and low >= 1 - 1e-12
        return _row("embed", ok, None if ok else {"interior": max(interior), "refine": refine},
                    check="indicator_box", interior_error=max(interior), refine_change=refine,
                    min_t_d_F_on_region=low)

    tasks.append(exactness)
    if cfg.d == 1:
        for eps in eps_list:
            for p in ps:
                def task(eps=eps, p=p):
                    grid = dy.build_grid(1, -2, L - 2)
                    rng = np.random.default_rng([cfg.seed, int(eps * 8), int(p * 8)])
                    f = emb.SourceFunction.from_fn(
                        grid, lambda x: np.where(rng.random(x.shape[:-1]) < 0.3,
                                                 rng.integers(0, 9, x.shape[:-1]) / 4, 0.0))
                    chk = emb.pointwise_bounds(f, grid, eps, p)
                    return _row("embed", chk.ok, None if chk.ok else asdict(chk), check="pointwise",
                                eps=eps, p=p, maximal_ratio=chk.maximal_ratio,
                                young_ratio=chk.young_ratio)
                tasks.append(task)
    for q in qs:
        for r in rs:
            def chain(q=q, r=r):
                div = emb.counterexample_divergence(q, r, d=cfg.d, heights=range(3, 9))
                chain_ok = all(c.ok for c in div.chain if c.u <= 64)
                lows = [g.norm.lower for g in div.growth]
                grows = all(g.norm.lower ** q >= g.chain_bound * (1 - 1e-12) for g in div.growth)
                inc = all(b > a for a, b in zip(lows[:-1], lows[1:]))
                var = [v for _, v in div.variant]
                var_inc = all(b > a for a, b in zip(var[:-1], var[1:])) if var else None
                ok = chain_ok and grows and inc
                bad = [asdict(c) for c in div.chain if not c.ok]
                return _row("embed", ok, bad or None, check="divergence", q=q, r=r, d=cfg.d,
                            u_max=max(c.u for c in div.chain),
                            chain_min_margin=min(min(c.mu_lower, c.mu_exact) / c.bound
                                                 for c in div.chain),
                            scaled_size=json.dumps(encode([c.scaled for c in div.chain])),
                            norm_lower=json.dumps(encode(lows)),
                            chain_bound=json.dumps(encode([g.chain_bound for g in div.growth])),
                            variant_sizes=json.dumps(encode(var)),
                            variant_increasing="" if var_inc is None else var_inc)
            tasks.append(chain)
    return Experiment(tasks, lambda rows: [_row("embed", all(x["passed"] for x in rows),
                                                kind="summary", rows=len(rows))])


TYPE_TRIPLES = ((2.0, 4.0, 2.0), (2.0, INF, INF), (1.0, INF, 1.0), (1.0, 1.0, INF))


def _exp_type_map(cfg: ExperimentConfig) -> Experiment:
    triples = cfg.tuples or TYPE_TRIPLES
    heights = tuple(cfg.j or (4, 5, 6, 7, 8))
    band = cfg.tol("stability", 2.0)
    eps = (cfg.eps or [1.0])[0]
    tasks = []
    for p, q, r in triples:
        def task(p=p, q=q, r=r):
            recs = emb.type_estimate_report(p, q, r, d=cfg.d, heights=heights, eps=eps)
            cls = emb.classify_embedding(p, q, r)
            strong = emb.stability(recs, "strong")
            weak = emb.stability(recs, "weak")
            fam = [x.strong for x in recs if x.member == "box_1"]
            incs = sum(b > a * (1 + 1e-9) for a, b in zip(fam[:-1], fam[1:]))
            if cls == "strong":
                ok = max(strong.values()) <= band
            elif cls == "weak":
                ok = max(weak.values()) <= band and incs >= min(4, len(fam) - 1)
            else:
                ok = True
            return _row("type-map", ok, None if ok else {"strong": strong, "weak": weak},
                        p=p, q=q, r=r, classification=cls,
                        strong_window=max(strong.values()), weak_window=max(weak.values()),
                        family_strong=json.dumps(encode(fam)), family_increases=incs,
                        strong_max=max(x.strong for x in recs), weak_max=max(x.weak for x in recs))
        tasks.append(task)
    return Experiment(tasks, lambda rows: [_row("type-map", all(x["passed"] for x in rows),
                                                kind="summary", rows=len(rows))])


def _exp_h1(cfg: ExperimentConfig) -> Experiment:
    js = cfg.j or list(range(-3, 4))
    band = cfg.tol("band", 4.0)
    slope_tol = cfg.tol("slope", 0.25)
    expected = -1 / 2

    def task(j):
        rec = emb.h1_atom_check(j)
        ok = rec.above_threshold == 0 and abs(rec.slope / expected - 1) <= slope_tol
        return _row("h1-atom", ok, None if ok else asdict(rec), j=j, norm_lower=rec.norm.lower,
                    norm_upper=rec.norm.upper, slope=rec.slope, decay_constant=rec.decay_constant,
                    sup_times_volume=rec.sup_times_volume, above_threshold=rec.above_threshold)

    def summarize(rows):
        ups = [x["norm_upper"] for x in rows]
        spread = max(ups) / min(ups)
        return [_row("h1-atom", all(x["passed"] for x in rows) and spread <= band, kind="summary",
                     spread=spread, norm_max=max(ups))]

    return Experiment([lambda j=j: task(j) for j in js], summarize)


def _exp_decompose(cfg):
    return _exp_decompose_dyadic(cfg) if cfg.space == "dyadic" else _exp_decompose_finite(cfg)


BUILDERS = {
    "norms": _exp_norms,
    "decompose": _exp_decompose,
    "duality": _exp_duality,
    "counterexample": _exp_counterexample,
    "tent-equivalence": _exp_tent,
    "hls": _exp_hls,
    "embed": _exp_embed,
    "type-map": _exp_type_map,
    "h1-atom": _exp_h1,
    "axioms-fuzz": _exp_axioms,
}


# ---------------------------------------------------------------- running

def threads() -> int:
    try:
        return max(1, int(os.environ.get("OUTERLP_THREADS", "1")))
    except ValueError as exc:
        raise ConfigParse("OUTERLP_THREADS must be an integer") from exc


def _timed(task):
    t0 = time.perf_counter()
    row = task()
    row["wall_time"] = time.perf_counter() - t0
    return row


def run(cfg: ExperimentConfig, sink=None):
    """Yield result rows in parameter-grid order; ``sink(row)`` is called on each as well."""
    exp = BUILDERS[cfg.command](cfg)
    rows = []
    k = threads()
    with ThreadPoolExecutor(max_workers=k) as pool:
        it = pool.map(_timed, exp.tasks) if k > 1 else map(_timed, exp.tasks)
        for row in it:
            rows.append(row)
            if sink:
                sink(row)
            yield row
    if exp.summarize:
        for row in exp.summarize(rows):
            row["wall_time"] = 0.0
            if sink:
                sink(row)
            yield row
