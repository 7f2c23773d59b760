"""Problem files: JSON schema validation, parsing into model objects, and canonical serialization."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ParseError, ValidationError
from .geometry import Ball, Box, Ellipsoid, FiniteSet, Polytope
from .model import (AbsTerm, AffineInX, CoefFn, FiniteDomain, FiniteScenarios, Interval, MaxTerm, ScalarExpr,
                    SmoothPiece, SurrogateTerm, UncertainMOP)

_SCHEMA = None


def problem_schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        _SCHEMA = json.loads(resources.files("hirob.data").joinpath("problem.schema.json").read_text())
    return _SCHEMA


@dataclass(frozen=True, eq=False)
class ProblemFile:
    problem: UncertainMOP
    candidates: dict  # name -> np.ndarray
    comments: object = None


# ---------------------------------------------------------------- parsing


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def _expr(d: dict, n: int) -> ScalarExpr:
    return ScalarExpr(
        constant=d.get("constant", 0.0),
        linear=d.get("linear"),
        quad=d.get("quad"),
        abs_terms=tuple(AbsTerm(t["weight"], t["a"], t.get("b", 0.0)) for t in d.get("abs_terms", [])),
        max_terms=tuple(MaxTerm(tuple(SmoothPiece(pc.get("constant", 0.0), pc["linear"], pc.get("quad"))
                                      for pc in m["pieces"])) for m in d.get("max_terms", [])),
        surrogate_terms=tuple(SurrogateTerm(t["fn"], t["weight"], t["a"], t.get("b", 0.0), t.get("subgradients"))
                              for t in d.get("surrogate_terms", [])),
        n=n,
    )


def _set(d: dict):
    kind = d["kind"]
    if kind == "box":
        return Box(d["lo"], d["hi"])
    if kind == "polytope":
        return Polytope(d["vertices"], d.get("rays") or None)
    if kind == "ball":
        return Ball(d["center"], d["radius"])
    if kind == "ellipsoid":
        return Ellipsoid(d["center"], d["shape"])
    return FiniteSet(d["points"])


def _coef(d) -> CoefFn:
    items = d if isinstance(d, list) else [d]
    return CoefFn(tuple((t["basis"], t["coeffs"]) for t in items))


def _domain(d: dict):
    if d["kind"] == "interval":
        return Interval(d["lo"], d["hi"], d.get("lo_closed", True), d.get("hi_closed", True))
    return FiniteDomain(tuple(d["values"]))


def _constraint(d: dict, n: int):
    if d["kind"] == "affine_in_x":
        if len(d["a"]) != n:
            raise ValidationError(f"affine constraint needs {n} coefficient functions")
        return AffineInX(tuple(_coef(c) for c in d["a"]), _coef(d["b"]), _domain(d["domain"]))
    return FiniteScenarios(tuple((s["v"], _expr(s["expr"], n)) for s in d["scenarios"]))


def problem_from_dict(doc: dict) -> ProblemFile:
    """Validate against the schema, then build and check the model objects."""
    validator = jsonschema.Draft202012Validator(problem_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ParseError(e.message, _pointer(e.absolute_path))
    n = doc["dimension"]
    where = "/"
    try:
        objs = []
        for i, o in enumerate(doc["objectives"]):
            where = f"/objectives/{i}"
            objs.append(_expr(o, n))
        sets = []
        for i, s in enumerate(doc["uncertainty"]):
            where = f"/uncertainty/{i}"
            sets.append(_set(s))
        cons = []
        for j, c in enumerate(doc.get("constraints", [])):
            where = f"/constraints/{j}"
            cons.append(_constraint(c, n))
        where = "/box_bounds"
        bb = doc.get("box_bounds")
        box = (bb["lo"], bb["hi"]) if bb else None
        where = "/"
        problem = UncertainMOP(n, objs, sets, cons, box, bool(doc.get("diagonal", False)))
        cands = {}
        for name, x in doc.get("candidates", {}).items():
            where = f"/candidates/{name}"
            x = np.asarray(x, dtype=float)
            if x.shape != (n,):
                raise ValidationError(f"candidate has length {x.size}, expected {n}")
            cands[name] = x
    except ValidationError as exc:
        raise type(exc)(f"{where}: {exc}") from None
    except ValueError as exc:  # dimension errors and friends from the model layer
        raise ValidationError(f"{where}: {exc}") from None
    return ProblemFile(problem, cands, doc.get("comments"))


def parse_problem(path) -> ProblemFile:
    """Load a problem file; schema violations raise ParseError, invariant breaches ValidationError."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg} (line {exc.lineno})", "/") from None
    return problem_from_dict(doc)


# ---------------------------------------------------------------- serialization


def _arr(a):
    return None if a is None else np.asarray(a, dtype=float).tolist()


def _expr_dict(e: ScalarExpr) -> dict:
    d = {"constant": e.constant, "linear": _arr(e.linear)}
    if e.quad is not None:
        d["quad"] = _arr(e.quad)
    if e.abs_terms:
        d["abs_terms"] = [{"weight": t.weight, "a": _arr(t.a), "b": t.b} for t in e.abs_terms]
    if e.max_terms:
        d["max_terms"] = [{"pieces": [{"constant": pc.constant, "linear": _arr(pc.linear),
                                       **({"quad": _arr(pc.quad)} if pc.quad is not None else {})}
                                      for pc in m.pieces]} for m in e.max_terms]
    if e.surrogate_terms:
        d["surrogate_terms"] = [{"fn": t.fn, "weight": t.weight, "a": _arr(t.a), "b": t.b,
                                 **({"subgradients": _arr(t.subgradients)} if t.subgradients is not None else {})}
                                for t in e.surrogate_terms]
    return d


def _set_dict(S) -> dict:
    if isinstance(S, Box):
        return {"kind": "box", "lo": _arr(S.lo), "hi": _arr(S.hi)}
    if isinstance(S, Polytope):
        return {"kind": "polytope", "vertices": _arr(S.vertices), "rays": _arr(S.rays)}
    if isinstance(S, Ball):
        return {"kind": "ball", "center": _arr(S.center), "radius": S.radius}
    if isinstance(S, Ellipsoid):
        return {"kind": "ellipsoid", "center": _arr(S.center), "shape": _arr(S.shape)}
    return {"kind": "finite", "points": _arr(S.points)}


def _coef_dict(c: CoefFn):
    return [{"basis": b, "coeffs": list(cs)} for b, cs in c.terms]


def _constraint_dict(g) -> dict:
    if isinstance(g, AffineInX):
        dom = g.domain
        if isinstance(dom, Interval):
            dd = {"kind": "interval", "lo": dom.lo, "hi": dom.hi, "lo_closed": dom.lo_closed, "hi_closed": dom.hi_closed}
        else:
            dd = {"kind": "finite", "values": list(dom.values)}
        return {"kind": "affine_in_x", "a": [_coef_dict(c) for c in g.a], "b": _coef_dict(g.b), "domain": dd}
    return {"kind": "finite_scenarios", "scenarios": [{"v": v, "expr": _expr_dict(e)} for v, e in g.scenarios]}


def problem_to_dict(pf: ProblemFile) -> dict:
    p = pf.problem
    d = {
        "dimension": p.n,
        "objectives": [_expr_dict(f) for f in p.objectives],
        "uncertainty": [_set_dict(S) for S in p.uncertainty],
        "constraints": [_constraint_dict(g) for g in p.constraints],
        "candidates": {k: _arr(v) for k, v in pf.candidates.items()},
    }
    if p.box_bounds is not None:
        d["box_bounds"] = {"lo": _arr(p.box_bounds[0]), "hi": _arr(p.box_bounds[1])}
    if p.diagonal:
        d["diagonal"] = True
    if pf.comments is not None:
        d["comments"] = pf.comments
    return d


def _plain(obj):
    """Convert numpy and enum values into JSON-ready Python objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if hasattr(obj, "value") and not isinstance(obj, (int, str)):
        return obj.value
    return obj


def _emit(obj, out: list):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if math.isnan(obj):
            out.append('"nan"')
        elif math.isinf(obj):
            out.append('"inf"' if obj > 0 else '"-inf"')
        else:
            out.append(format(obj, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, list):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _emit(v, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, k in enumerate(sorted(obj)):
            if i:
                out.append(",")
            out.append(json.dumps(k))
            out.append(":")
            _emit(obj[k], out)
        out.append("}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_dumps(obj) -> str:
    """Sorted keys, no whitespace, floats at 17 significant digits, non-finite floats as strings."""
    out: list[str] = []
    _emit(_plain(obj), out)
    return "".join(out)


def problem_hash(path) -> str:
    """SHA-256 of the canonical form of the problem document."""
    doc = json.loads(Path(path).read_text())
    return hashlib.sha256(canonical_dumps(doc).encode()).hexdigest()


def write_problem(pf: ProblemFile, path) -> None:
    Path(path).write_text(json.dumps(_plain(problem_to_dict(pf)), indent=2, sort_keys=True) + "\n")


def fixture_path(name: str) -> Path:
    """Path of a bundled example problem, e.g. ``fixture_path("exhrob")``."""
    fname = name if name.endswith(".json") else f"{name}.json"
    return Path(str(resources.files("hirob.data").joinpath(fname)))
