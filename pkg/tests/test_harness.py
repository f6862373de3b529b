import csv
import io
import json
import math

import numpy as np
import pytest

from outerlp import cli
from outerlp import io as oio
from outerlp.decomposition import greedy_decompose_finite
from outerlp.dyadic import CellFunction, build_grid, greedy_decompose_dyadic
from outerlp.errors import ConfigParse, SpaceTooLarge
from outerlp.finite import INF, ExplicitTable, Generators, build_space, outer_measure
from outerlp.harness import (
    ExperimentConfig,
    config_from_dict,
    generate_instance,
    parse_list,
    parse_number,
    parse_tuples,
    random_cell_function,
    run,
    second_function,
    topology_hash,
)


# ---------------------------------------------------------------- instances

def test_instance_deterministic():
    a, fa = generate_instance(7, 8)
    b, fb = generate_instance(7, 8)
    assert a.generators == b.generators
    assert np.array_equal(a.weights, b.weights) and np.array_equal(fa, fb)
    assert np.array_equal(second_function(7, 8), second_function(7, 8))


def test_instance_covered_and_dyadic():
    for seed in range(50):
        sp, f = generate_instance(seed, 6)
        assert sp.covered == sp.full
        for arr in (sp.weights, f, np.array([s for _, s in sp.generators])):
            assert np.all(arr * 4 == np.round(arr * 4))


def test_instance_size_one():
    sp, f = generate_instance(3, 1)
    assert sp.n == 1 and f.shape == (1,)


def test_instance_size_limit():
    with pytest.raises(SpaceTooLarge):
        generate_instance(0, 21)


def test_topology_coverage():
    hashes = {topology_hash(generate_instance(s, 4)[0]) for s in range(40)}
    assert len(hashes) >= 3


def test_topology_hash_invariant_under_relabelling():
    a = build_space(3, [1, 1, 1], Generators([([0, 1], 1), ([2], 2)]))
    b = build_space(3, [1, 1, 1], Generators([([1, 2], 1), ([0], 2)]))
    c = build_space(3, [1, 1, 1], Generators([([0, 1, 2], 1)]))
    assert topology_hash(a) == topology_hash(b) != topology_hash(c)
    assert topology_hash(a, exact_limit=0) == topology_hash(b, exact_limit=0)


# ---------------------------------------------------------------- config parsing

def test_parse_helpers():
    assert parse_number("4/3") == pytest.approx(4 / 3)
    assert parse_number("inf") == INF
    assert parse_list("2..4,inf") == [2.0, 3.0, 4.0, INF]
    assert parse_list("1..3", integer=True) == [1, 2, 3]
    assert parse_tuples("2:2,4:4/3") == [(2.0, 2.0), (4.0, pytest.approx(4 / 3))]
    with pytest.raises(ConfigParse):
        parse_number("abc")
    with pytest.raises(ConfigParse):
        parse_list("1.5", integer=True)


def test_config_errors():
    with pytest.raises(ConfigParse):
        ExperimentConfig(command="nope")
    with pytest.raises(ConfigParse):
        config_from_dict({"command": "norms", "colour": 1})
    with pytest.raises(ConfigParse):
        config_from_dict({"n": 3})
    with pytest.raises(ConfigParse):
        ExperimentConfig(command="norms", format="xml")
    cfg = config_from_dict({"command": "norms", "p": "1,2", "size": "2..3", "values": {"K": 2}})
    assert cfg.p == [1.0, 2.0] and cfg.size == [2, 3] and cfg.values.K == 2


# ---------------------------------------------------------------- runs

def test_rows_have_no_nan_and_order():
    rows = list(run(ExperimentConfig(command="counterexample", m=[3, 1, 2], r=[2.0])))
    assert [r["m"] for r in rows if r["kind"] == "row"] == [3, 1, 2]
    assert rows[-1]["kind"] == "summary"
    for r in rows:
        for v in r.values():
            assert not (isinstance(v, float) and math.isnan(v))


def test_threads_keep_order(monkeypatch):
    monkeypatch.setenv("OUTERLP_THREADS", "3")
    rows = list(run(ExperimentConfig(command="axioms-fuzz", n=30, size=[4, 5], seed=1)))
    monkeypatch.setenv("OUTERLP_THREADS", "1")
    again = list(run(ExperimentConfig(command="axioms-fuzz", n=30, size=[4, 5], seed=1)))
    strip = lambda rs: [{k: v for k, v in r.items() if k != "wall_time"} for r in rs]
    assert strip(rows) == strip(again)


def test_axioms_fuzz_cli_example():
    rows = [r for r in run(ExperimentConfig(command="axioms-fuzz", n=200, size=[8], seed=7))
            if r["kind"] == "row"]
    assert len(rows) == 200 and all(r["passed"] for r in rows)


def test_duality_cli_example():
    rows = list(run(ExperimentConfig(command="duality", p=[2.0], r=[1.0], n=40, size=[5])))
    summ = [r for r in rows if r["kind"] == "summary"]
    assert summ and all(r["passed"] for r in rows)


# ---------------------------------------------------------------- CLI

def _csv_without_time(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    k = rows[0].index("wall_time")
    return [r[:k] + r[k + 1:] for r in rows]


def test_cli_counterexample(tmp_path, capsys):
    assert cli.main(["counterexample", "--m", "2..5", "--r", "2"]) == 0
    out = capsys.readouterr().out
    rows = list(csv.DictReader(io.StringIO(out)))
    body = [r for r in rows if r["kind"] == "row"]
    assert [int(r["m"]) for r in body] == [2, 3, 4, 5]
    for r in body:
        m = int(r["m"])
        assert float(r["lhs"]) >= 2 ** m * (m + 1) / 2
        assert float(r["rhs"]) == pytest.approx(2 ** m * math.sqrt(m + 1), rel=1e-12)


def test_cli_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert cli.main(["norms", "--n", "20", "--size", "2..5", "--seed", "3",
                         "--output", str(path)]) == 0
    assert _csv_without_time(a) == _csv_without_time(b)


def test_cli_failure_exit_code(tmp_path):
    out = tmp_path / "x.json"
    code = cli.main(["counterexample", "--m", "2", "--r", "2", "--tol", "rhs_rel=-1",
                     "--format", "json", "--output", str(out)])
    assert code == 1
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert not rows[0]["passed"] and json.loads(rows[0]["witness"])["m"] == 2


def test_cli_error_exit_code(tmp_path, capsys):
    assert cli.main(["norms", "--p", "abc"]) == 2
    assert cli.main(["norms", "--size", "30", "--n", "1"]) == 2
    err = capsys.readouterr().err
    assert "ConfigParse" in err and "SpaceTooLarge" in err
    assert cli.main(["norms", "--tol", "noequals"]) == 2


def test_cli_config_file(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"m": "2..3", "r": [2], "format": "json"}))
    assert cli.main(["counterexample", "--config", str(path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert json.loads(lines[0])["m"] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert cli.main(["counterexample", "--config", str(bad)]) == 2


def test_cli_inf_serialized(capsys):
    assert cli.main(["counterexample", "--m", "2", "--r", "inf", "--format", "json"]) in (0, 1)
    row = json.loads(capsys.readouterr().out.splitlines()[0])
    assert row["r"] == "inf"


# ---------------------------------------------------------------- serialization

def test_encode_rules():
    assert oio.encode({"a": INF, "b": [1, np.float64(2.5)], "c": np.bool_(True)}) == \
        {"a": "inf", "b": [1, 2.5], "c": True}
    with pytest.raises(ValueError):
        oio.encode(float("nan"))
    with pytest.raises(ValueError):
        oio.encode(-INF)
    assert oio.decode_number("inf") == INF


def test_space_round_trip():
    sp = build_space(["a", "b", "c"], [0.5, 1, 2], Generators([(["a", "b"], 1.5), (["c"], 0.25)]))
    doc = json.loads(oio.dumps(oio.space_to_dict(sp)))
    assert doc["points"] == ["a", "b", "c"] and doc["kind"] == "finite_space"
    back = oio.space_from_dict(doc)
    assert back.labels == sp.labels and back.generators == sp.generators
    t = {(): 0, ("a",): 1, ("b",): INF, ("a", "b"): INF}
    sp2 = build_space(["a", "b"], [1, 1], ExplicitTable(t))
    back2 = oio.space_from_dict(json.loads(oio.dumps(oio.space_to_dict(sp2))))
    assert outer_measure(back2, ["b"]) == INF


def test_function_and_decomposition_round_trip():
    sp, f = generate_instance(5, 6)
    f = f.copy()
    f[0] = INF
    doc = json.loads(oio.dumps(oio.function_to_dict(f)))
    assert np.array_equal(oio.function_from_dict(doc), f)
    sp, f = generate_instance(5, 6)
    dec = greedy_decompose_finite(sp, f, 2.0)
    back = oio.decomposition_from_dict(sp, json.loads(oio.dumps(oio.decomposition_to_dict(sp, dec))))
    assert back == dec


def test_dyadic_round_trip():
    g = build_grid(1, -1, 4)
    F = random_cell_function(g, np.random.default_rng(0))
    G = oio.cell_function_from_dict(json.loads(oio.dumps(oio.cell_function_to_dict(F))))
    assert G.grid == g and all(np.array_equal(a, b) for a, b in zip(F.values, G.values))
    dec = greedy_decompose_dyadic(g, F, 2.0)
    back = oio.dyadic_decomposition_from_dict(json.loads(oio.dumps(oio.dyadic_decomposition_to_dict(dec))))
    assert back == dec
    Z = oio.cell_function_from_dict(oio.cell_function_to_dict(CellFunction.zeros(g)))
    assert Z.is_zero()
