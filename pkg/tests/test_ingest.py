import numpy as np
import pytest

from hirob.errors import IngestError
from hirob.geometry import Ball, Box, Ellipsoid, FiniteSet
from hirob.ingest import ingest_returns, read_returns
from hirob.io import parse_problem, write_problem
from hirob.model import eval_scalar


def _csv(path, R, names=None):
    names = names or [f"a{k}" for k in range(R.shape[1])]
    lines = [",".join(names)] + [",".join(repr(float(v)) for v in row) for row in R]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def returns(rng):
    return rng.normal(0.01, 0.05, size=(40, 3))


def test_statistics_over_trailing_window(tmp_path, returns):
    f = _csv(tmp_path / "r.csv", returns)
    pf = ingest_returns(f, 20, "box")
    W = returns[-20:]
    mean = W.mean(axis=0)
    cov = np.cov(W.T)
    se = W.std(axis=0, ddof=1) / np.sqrt(20)
    x = np.array([0.2, 0.3, 0.5])
    f1, f2 = pf.problem.objectives
    assert eval_scalar(f1, x) == pytest.approx(-mean @ x)
    assert eval_scalar(f2, x) == pytest.approx(x @ cov @ x)
    U1 = pf.problem.uncertainty[0]
    assert isinstance(U1, Box)
    np.testing.assert_allclose(U1.hi, 2 * se)
    assert isinstance(pf.problem.uncertainty[1], FiniteSet)
    np.testing.assert_allclose(pf.candidates["equal_weight"], np.full(3, 1 / 3))


def test_set_types(tmp_path, returns):
    f = _csv(tmp_path / "r.csv", returns)
    se = returns[-10:].std(axis=0, ddof=1) / np.sqrt(10)
    ball = ingest_returns(f, 10, "ball").problem.uncertainty[0]
    assert isinstance(ball, Ball) and ball.radius == pytest.approx(2 * np.linalg.norm(se))
    ell = ingest_returns(f, 10, "ellipsoid").problem.uncertainty[0]
    assert isinstance(ell, Ellipsoid)
    np.testing.assert_allclose(np.diag(ell.shape), (2 * se) ** 2)


def test_budget_constraint_and_round_trip(tmp_path, returns):
    f = _csv(tmp_path / "r.csv", returns)
    pf = ingest_returns(f, 30, "box", budget=2.0)
    out = tmp_path / "p.json"
    write_problem(pf, out)
    again = parse_problem(out)
    g = again.problem.constraints[0]
    X = np.array([[1.0, 0.5, 0.5], [1.0, 1.0, 0.5], [-0.1, 0.0, 0.0]])
    np.testing.assert_allclose(g.values(X, list(g.domain.values)).max(axis=1), [0.0, 0.5, 0.1])
    assert again.comments["window"] == 30


def test_constant_returns_give_point_set(tmp_path):
    f = _csv(tmp_path / "r.csv", np.ones((5, 2)) * 0.01)
    assert isinstance(ingest_returns(f, 5, "ball").problem.uncertainty[0], FiniteSet)


@pytest.mark.parametrize("body,msg", [("a,b\n1,2\n3\n", "cells"), ("a,b\n1,x\n", "non-numeric"), ("", "empty")])
def test_malformed_csv(tmp_path, body, msg):
    f = tmp_path / "r.csv"
    f.write_text(body)
    with pytest.raises(IngestError, match=msg):
        read_returns(f)


def test_argument_checks(tmp_path, returns):
    f = _csv(tmp_path / "r.csv", returns)
    with pytest.raises(IngestError):
        ingest_returns(f, 100)
    with pytest.raises(IngestError):
        ingest_returns(f, 10, "cone")
    with pytest.raises(IngestError):
        ingest_returns(f, 10, budget=0.0)
    R = returns.copy()
    R[:, 1] = 0.02
    with pytest.raises(IngestError, match="zero variance"):
        ingest_returns(_csv(tmp_path / "z.csv", R), 10, "ellipsoid")
