import json
import math

import numpy as np
import pytest

from hirob.errors import ParseError, ValidationError
from hirob.io import (canonical_dumps, fixture_path, parse_problem, problem_from_dict, problem_hash,
                      problem_to_dict, write_problem)
from hirob.model import eval_scalar

FIXTURES = ["exhrob", "ex1-nec1", "ex2-nec1", "ex-neckkt", "disk"]


@pytest.mark.parametrize("name", FIXTURES)
def test_round_trip_preserves_semantics(name, tmp_path, rng):
    pf = parse_problem(fixture_path(name))
    out = tmp_path / "p.json"
    write_problem(pf, out)
    again = parse_problem(out)
    assert problem_to_dict(again) == json.loads(json.dumps(problem_to_dict(pf)))
    X = rng.uniform(-1, 1, size=(20, pf.problem.n))
    for f, g in zip(pf.problem.objectives, again.problem.objectives):
        np.testing.assert_array_equal(eval_scalar(f, X), eval_scalar(g, X))


def _doc():
    return json.loads(fixture_path("exhrob").read_text())


def test_schema_error_carries_pointer():
    doc = _doc()
    doc["uncertainty"][1]["kind"] = "cylinder"
    with pytest.raises(ParseError) as exc:
        problem_from_dict(doc)
    assert exc.value.pointer.startswith("/uncertainty/1")


def test_missing_objectives_is_a_parse_error():
    doc = _doc()
    del doc["objectives"]
    with pytest.raises(ParseError):
        problem_from_dict(doc)


def test_reversed_box_is_a_validation_error():
    doc = _doc()
    doc["uncertainty"][0] = {"kind": "box", "lo": [1.0], "hi": [0.0]}
    with pytest.raises(ValidationError, match="/uncertainty/0"):
        problem_from_dict(doc)


def test_candidate_length_checked():
    doc = _doc()
    doc["candidates"]["bad"] = [0.0, 1.0]
    with pytest.raises(ValidationError, match="/candidates/bad"):
        problem_from_dict(doc)


def test_invalid_json(tmp_path):
    f = tmp_path / "broken.json"
    f.write_text("{not json")
    with pytest.raises(ParseError):
        parse_problem(f)


def test_canonical_dumps():
    assert canonical_dumps({"b": 0.1, "a": [math.inf, -math.inf, math.nan, None, True, np.int64(3)]}) == \
        '{"a":["inf","-inf","nan",null,true,3],"b":0.10000000000000001}'


def test_hash_ignores_formatting(tmp_path):
    doc = _doc()
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps(doc))
    b.write_text(json.dumps(doc, indent=4, sort_keys=True))
    assert problem_hash(a) == problem_hash(b)
    doc["box_bounds"]["hi"] = [2.0]
    a.write_text(json.dumps(doc))
    assert problem_hash(a) != problem_hash(b)
