import io
import itertools
import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from bmsgame import model
from bmsgame.model import (BUNDLED, VERTICES_ONLY, DimensionMismatch,
                           EmptyClause, Mode, NoModeWithinBudget, SchemaError,
                           StartOutsideSafety, System, UnboundedSafety,
                           enumerate_instances, gen_green, gen_sat,
                           instance_count, parse_dimacs)
from bmsgame.safety import bms_safe

ZONES = [{"on": (-2, 2), "off": (2, 1)}, {"on": (-2, 2), "off": (2, 1)}]


def doc(**over):
    d = {"n": 2, "modes": [{"name": "a", "rates": [[0, 1]]}, {"name": "b", "rates": [[0, -1]]}],
         "safety": {"A": [[-1, 0], [1, 0], [0, -1], [0, 1]], "b": [0, 1, 0, 1]},
         "start": ["1/2", "0.5"]}
    d.update(over)
    return d


def test_load_example4_bundle():
    p = model.load("example4.json")
    assert [len(m.rate_vertices) for m in p.system.modes] == [2, 2]
    assert p.system.modes[0].rate_vertices == ((0, 1), (0, F(3, 2)))
    assert p.start == (-1, F(-1, 2))
    assert p.safety.rows == 4


def test_rationals_parsed_exactly():
    p = model.problem_from_dict(doc())
    assert p.start == (F(1, 2), F(1, 2))


def test_start_outside():
    with pytest.raises(StartOutsideSafety) as e:
        model.problem_from_dict(doc(start=[5, 5]))
    assert e.value.code == "StartOutsideSafety"


def test_rate_dimension_mismatch():
    bad = doc(modes=[{"name": "a", "rates": [[0, 1, 2]]}])
    with pytest.raises(DimensionMismatch):
        model.problem_from_dict(bad)


def test_unbounded_safety():
    with pytest.raises(UnboundedSafety):
        model.problem_from_dict(doc(safety={"A": [[1, 0], [0, 1]], "b": [1, 1]}))


def test_schema_violation():
    with pytest.raises(SchemaError):
        model.problem_from_dict({"n": 2})
    with pytest.raises(SchemaError):
        model.loads("{not json")
    with pytest.raises(SchemaError):
        model.problem_from_dict(doc(start=["x", 0]))


def test_error_codes_are_distinct():
    codes = {c.code for c in (SchemaError, DimensionMismatch, UnboundedSafety, StartOutsideSafety)}
    assert len(codes) == 4


def test_duplicate_mode_names_rejected():
    with pytest.raises(SchemaError):
        model.problem_from_dict(doc(modes=[{"name": "a", "rates": [[0, 1]]},
                                           {"name": "a", "rates": [[0, -1]]}]))


@pytest.mark.parametrize("name", [b for b in BUNDLED if b.endswith(".json") and "config" not in b])
def test_bundled_round_trip(name):
    p = model.load(name)
    text = model.dumps(p)
    assert model.loads(text) == p
    assert model.dumps(model.loads(text)) == text


def test_save_to_stream_and_path(tmp_path):
    p = model.problem_from_dict(doc())
    buf = io.StringIO()
    model.save(p, buf)
    path = tmp_path / "m.json"
    model.save(p, path)
    assert model.load(path) == p == model.load(io.StringIO(buf.getvalue()))
    assert json.loads(buf.getvalue())["start"] == ["1/2", "1/2"]


def test_polytope_semantics_filters_rates():
    s = System.from_rates([[(0, 0), (1, 0), (2, 0), (1, 0)]])
    assert s.modes[0].rate_vertices == ((0, 0), (2, 0))
    v = System.from_rates([[(0, 0), (1, 0), (2, 0), (1, 0)]], semantics=VERTICES_ONLY)
    assert v.modes[0].rate_vertices == ((0, 0), (1, 0), (2, 0))


def test_instance_counts():
    two = System.from_rates([[(0, 1), (0, 2)], [(0, -1), (0, -2)]])
    assert list(enumerate_instances(two)) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    cms = System.from_rates([[(1, 0)], [(0, 1)]])
    assert list(enumerate_instances(cms)) == [(0, 0)]
    mixed = System.from_rates([[(1,), (2,)], [(3,)], [(4,), (5,), (6,)]], semantics=VERTICES_ONLY)
    insts = list(enumerate_instances(mixed))
    assert len(insts) == instance_count(mixed) == 6
    assert len(set(insts)) == 6
    assert list(enumerate_instances(mixed, reverse=True)) == insts[::-1]


def test_gen_sat_fig5_left():
    s = gen_sat([[1, 2, 3], [-1, -2, -3]])
    assert s.semantics == VERTICES_ONLY
    assert s.modes[0].rate_vertices == ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    assert s.modes[1].rate_vertices == ((-1, 0, 0), (0, -1, 0), (0, 0, -1))


def test_gen_sat_fig5_right():
    s = gen_sat([[1], [-1], [1, 2, 3]])
    assert [m.rate_vertices for m in s.modes] == [
        ((1, 0, 0),), ((-1, 0, 0),), ((1, 0, 0), (0, 1, 0), (0, 0, 1))]


def test_gen_sat_single_and_duplicates():
    assert gen_sat([[1]]).modes[0].rate_vertices == ((1,),)
    assert gen_sat([[1, 1, 1]]).modes[0].rate_vertices == ((1,),)
    with pytest.raises(EmptyClause):
        gen_sat([[1], []])


def test_parse_dimacs():
    text = model.bundled_model("fig5-right.cnf")
    assert parse_dimacs(text) == [[1], [-1], [1, 2, 3]]
    assert parse_dimacs("1 -2\n 3 0 -1 0") == [[1, -2, 3], [-1]]


def test_gen_green_budgets():
    s3 = gen_green(ZONES, 3)
    assert [(m.name, m.rate_vertices) for m in s3.modes] == [
        ("m00", ((2, 2),)), ("m01", ((2, -2),)), ("m10", ((-2, 2),))]
    s4 = gen_green(ZONES, 4)
    assert s4.mode("m11").rate_vertices == ((-2, -2),)
    with pytest.raises(NoModeWithinBudget):
        gen_green(ZONES, 1)


def test_missing_model_file():
    with pytest.raises(SchemaError):
        model.load("/nonexistent/none.json")


def satisfiable(clauses, n):
    return any(all(any((lit > 0) == val[abs(lit) - 1] for lit in c) for c in clauses)
               for val in itertools.product((False, True), repeat=n))


clause = st.lists(st.integers(1, 3).flatmap(lambda v: st.sampled_from([v, -v])),
                  min_size=1, max_size=3)


@settings(max_examples=80, deadline=None)
@given(st.lists(clause, min_size=1, max_size=4))
def test_sat_reduction_round_trip(clauses):
    n = max(abs(l) for c in clauses for l in c)
    assert satisfiable(clauses, n) == (not bms_safe(gen_sat(clauses)).safe)
