"""Acceptance criteria, one test each; the terminal summary prints a PASS/FAIL line per criterion.

Tolerances are pinned here and echoed in the printed line.
"""

import math

import numpy as np

from outerlp.decomposition import counterexample_ratios
from outerlp.harness import ExperimentConfig, run

INF = math.inf


def rows_of(**kw):
    rows = list(run(ExperimentConfig(**kw)))
    return [r for r in rows if r["kind"] != "summary"], [r for r in rows if r["kind"] == "summary"]


def test_c01_choquet_oracle(criterion):
    rows, _ = rows_of(command="axioms-fuzz", n=500, size=list(range(1, 11)), seed=101)
    bad = [r for r in rows if not r["choquet_ok"]]
    ok = len(rows) == 500 and not bad
    criterion(1, "r=inf super level equals level-set outer measure", ok,
              f"{len(rows)} instances |X|<=10, tolerance 0, mismatches {len(bad)}")
    assert ok


def test_c02_subcollection_strategies(criterion):
    rows, _ = rows_of(command="axioms-fuzz", n=500, size=list(range(1, 9)), seed=202)
    bad = [r for r in rows if not r["strategies_ok"]]
    ok = len(rows) == 500 and not bad
    criterion(2, "subset and subcollection strategies agree", ok,
              f"{len(rows)} instances |X|<=8, r in {{1,2}}, tolerance 0, mismatches {len(bad)}")
    assert ok


def test_c03_finite_decomposition(criterion):
    rows, summ = rows_of(command="decompose", n=1000, size=list(range(2, 9)), r=[1.0, 2.0], seed=303)
    bad = [r for r in rows if not r["passed"]]
    drift = {s["r"]: s["drift"] for s in summ}
    cmax = {s["r"]: s["c_emp_max"] for s in summ}
    ok = not bad and all(math.isfinite(c) for c in cmax.values()) and all(d < 0.05 for d in drift.values())
    criterion(3, "Prop 2.1 properties (a)-(d) with stable constant", ok,
              f"1000 instances per r, failures {len(bad)}, C_emp {cmax}, running-max drift over "
              f"last 500 {drift} (< 0.05)")
    assert ok


def test_c04_outer_holder(criterion):
    tuples = [(2.0, 2.0, 2.0, 2.0), (4.0, 4 / 3, 2.0, 2.0), (INF, 1.0, INF, 1.0)]
    rows, _ = rows_of(command="norms", n=500, size=list(range(1, 9)), seed=404, tuples=tuples,
                      p=[2.0], r=[1.0, 2.0])
    worst = max(r["holder_ratio_max"] for r in rows)
    viol = sum(r["holder_ratio_max"] > 2 * (1 + 1e-9) for r in rows)
    ok = len(rows) == 500 and viol == 0
    criterion(4, "outer Hoelder with constant 2", ok,
              f"500 instances x {len(tuples)} exponent tuples, max ratio {worst:.4f} (<= 2, rtol 1e-9), "
              f"violations {viol}")
    assert ok


def test_c05_kothe_duality(criterion):
    rows, summ = rows_of(command="duality", n=100, size=[4, 6, 8], seed=505)
    holder_bad = sum(not r["holder_ok"] for r in rows)
    spreads = {(s["p"], s["r"]): round(s["spread"], 4) for s in summ}
    ok = holder_bad == 0 and all(s["passed"] for s in summ)
    criterion(5, "dual witness lower bound uniform across |X|", ok,
              f"(p,r) in {{(2,1),(2,2),(4,2),(inf,1)}}, 100 instances per size in {{4,6,8}}, "
              f"min-c spread across sizes {spreads} (<= 3), Hoelder violations {holder_bad}")
    assert ok


def test_c06_non_uniformity(criterion):
    worst_rhs, lhs_ok = 0.0, True
    for r in (2.0, 4.0):
        for m in range(1, 13):
            lhs, rhs, _ = counterexample_ratios(m, r)
            exact = 2.0 ** m * (m + 1) ** (1 / r)
            worst_rhs = max(worst_rhs, abs(rhs - exact) / exact)
            lhs_ok &= lhs >= 2.0 ** m * (m + 1) / 2 * (1 - 1e-12)
    ratio = counterexample_ratios(12, 2.0)[2]
    ok = worst_rhs <= 1e-12 and lhs_ok and ratio >= 1.8
    criterion(6, "chain family lhs/rhs", ok,
              f"m<=12, r in {{2,4}}: rhs rel err {worst_rhs:.1e} (<= 1e-12), lhs >= 2^m(m+1)/2 "
              f"{lhs_ok}, ratio(12,2) = {ratio:.4f} (>= 1.8)")
    assert ok


def test_c07_dyadic_carleson(criterion):
    rows, _ = rows_of(command="decompose", space="dyadic", n=100, j=[4, 5, 6, 7, 8], seed=707)
    car = max(r["carleson"] for r in rows)
    frac = min(r["sparse_fraction"] for r in rows)
    bad = [r for r in rows if not (r["carleson_ok"] and r["sparse_ok"])]
    ok = len(rows) == 500 and not bad and car <= 2.0
    criterion(7, "Prop 2.2 Carleson <= 2 and 1/2-sparse witness", ok,
              f"100 CellFunctions per L in 4..8 (d=1), max Carleson {car} (<= 2 exact), "
              f"min sparse fraction {frac} (>= 1/2), failures {len(bad)}")
    assert ok


def test_c08_tent_equivalence(criterion):
    _, summ = rows_of(command="tent-equivalence", n=50, j=[4, 8], seed=808)
    change = {(s["p"], s["r"]): round(s["window_change"], 4) for s in summ}
    ok = len(summ) == 4 and all(v < 2.0 for v in change.values())
    criterion(8, "tent/outer ratio window stable from L=4 to L=8", ok,
              f"50-function suite, window change {change} (< 2)")
    assert ok


def test_c09_hls_inclusion(criterion):
    rows, summ = rows_of(command="hls", n=120, j=[6], seed=909)
    atom = max(r["value"] for r in rows if r["kind"] == "atom")
    s = summ[0]
    ok = atom <= 1.10 and math.isfinite(s["ratio_max"]) and s["drift"] <= 0.25
    criterion(9, "HLS inclusion and atom lemma", ok,
              f"atom max {atom:.4f} (<= 1 + 10%), (1,2,2,1) running max {s['ratio_max']:.4f}, "
              f"drift over second half {s['drift']:.4f} (<= 0.25)")
    assert ok


def test_c10_type_map(criterion):
    rows, _ = rows_of(command="type-map", j=[4, 5, 6, 7, 8])
    by = {(r["p"], r["q"], r["r"]): r for r in rows}
    strong_ok = all(math.isfinite(by[k]["strong_max"]) and by[k]["strong_window"] <= 2.0
                    for k in [(2.0, 4.0, 2.0), (2.0, INF, INF), (1.0, INF, 1.0)])
    end = by[(1.0, 1.0, INF)]
    endpoint_ok = end["weak_window"] <= 2.0 and end["family_increases"] >= 4
    emb, _ = rows_of(command="embed", q=[2.0], r=[2.0, INF])
    chains = [r for r in emb if r["check"] == "divergence"]
    chain_ok = all(r["passed"] and r["u_max"] >= 64 for r in chains)
    ok = strong_ok and endpoint_ok and chain_ok
    criterion(10, "embedding type map", ok,
              f"strong windows {[round(by[k]['strong_window'], 4) for k in by if k != (1.0, 1.0, INF)]} "
              f"(<= 2); (1,1,inf) weak window {end['weak_window']:.4f} (<= 2), strong increases "
              f"{end['family_increases']} (>= 4); chain mu >= u^d for u <= 64: {chain_ok}")
    assert ok


def test_c11_h1_atom(criterion):
    rows, summ = rows_of(command="h1-atom", j=list(range(-3, 4)))
    ups = [r["norm_upper"] for r in rows]
    band = max(ups) / min(ups)
    slope0 = [r["slope"] for r in rows if r["j"] == 0][0]
    slopes_ok = all(abs(r["slope"] / (-0.5) - 1) <= 0.25 for r in rows)
    ok = band <= 4.0 and slopes_ok and all(r["above_threshold"] == 0 for r in rows)
    criterion(11, "H^1 atom embedding", ok,
              f"upper brackets j=-3..3 in [{min(ups):.4f}, {max(ups):.4f}], band {band:.4f} (<= 4); "
              f"decay slope at j=0 {slope0:.4f} vs -1/2 (within 25%: {slopes_ok})")
    assert ok
