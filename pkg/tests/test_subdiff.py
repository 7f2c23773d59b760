import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hirob.errors import DomainError, UnsupportedExpression
from hirob.geometry import Polytope, contains_point, same_set, support_value
from hirob.model import AbsTerm, MaxTerm, ScalarExpr, SmoothPiece, SurrogateTerm
from hirob.subdiff import fd_gradient, subdiff_constraint, subdiff_objective_scenario, subdiff_scalar

from oracles import central_gradient, kink_clearance, naive_eval, random_expr


def _vertex_set(P):
    return sorted(map(tuple, np.round(P.vertices, 12)))


def test_abs_kink_segments_of_first_example(ex1):
    p, xbar = ex1.problem, ex1.candidates["xbar"]
    assert _vertex_set(subdiff_scalar(p.objectives[0], xbar)) == [(-1.0, 1.0), (1.0, 1.0)]
    assert _vertex_set(subdiff_scalar(p.objectives[1], xbar)) == [(1.0, -1.0), (1.0, 1.0)]


def test_scenario_shift_translates():
    f = ScalarExpr(linear=[1.0, 2.0])
    P = subdiff_scalar(f, [0, 0]).translate([-0.5, 1.0])
    assert _vertex_set(P) == [(0.5, 3.0)]


def test_objective_scenario_subdifferential(ex1):
    p = ex1.problem
    P = subdiff_objective_scenario(p, 0, [-1.0, -1.0], [-1.0, 0.0])
    assert _vertex_set(P) == [(0.0, 1.0), (2.0, 1.0)]


def test_max_term_is_hull_of_active_gradients():
    m = MaxTerm((SmoothPiece(0.0, [1.0, 0.0]), SmoothPiece(0.0, [0.0, 1.0]), SmoothPiece(-1.0, [5.0, 5.0])))
    P = subdiff_scalar(ScalarExpr(max_terms=(m,)), [0.0, 0.0])
    assert _vertex_set(P) == [(0.0, 1.0), (1.0, 0.0)]


def test_surrogate_terms():
    cbrt = ScalarExpr(surrogate_terms=(SurrogateTerm("cbrt", -1.0, [1.0]),))
    g = subdiff_scalar(cbrt, [-1.0]).vertices
    np.testing.assert_allclose(g, [[-1.0 / 3.0]])
    with pytest.raises(UnsupportedExpression):
        subdiff_scalar(cbrt, [0.0])
    osc = ScalarExpr(surrogate_terms=(SurrogateTerm("x2sin_inv", 1.0, [1.0], subgradients=[[-1.0], [1.0]]),))
    assert _vertex_set(subdiff_scalar(osc, [0.0])) == [(-1.0,), (1.0,)]
    assert subdiff_scalar(osc, [0.3]).vertices[0, 0] == pytest.approx(central_gradient(osc, [0.3])[0], abs=1e-7)


def test_constraint_subdifferentials(neckkt):
    p = neckkt.problem
    np.testing.assert_allclose(subdiff_constraint(p, 0, [-1, -1], np.pi).vertices, [[0.0, -1.0]], atol=1e-15)
    np.testing.assert_allclose(subdiff_constraint(p, 1, [-1, -1], 1.0).vertices, [[-1.0, 0.0]])
    # the open endpoint 2 is in the closure and still has a gradient
    np.testing.assert_allclose(subdiff_constraint(p, 1, [-1, -1], 2.0).vertices, [[-1.0, 0.0]])
    with pytest.raises(DomainError):
        subdiff_constraint(p, 1, [-1, -1], 3.0)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_smooth_points_give_finite_difference_gradient(seed, n):
    rng = np.random.default_rng(seed)
    e = random_expr(rng, n)
    x = rng.normal(size=n)
    if kink_clearance(e, x) < 1e-3:
        return
    P = subdiff_scalar(e, x)
    assert P.vertices.shape[0] == 1
    ref = central_gradient(e, x)
    np.testing.assert_allclose(P.vertices[0], ref, rtol=1e-6, atol=1e-6 * max(1.0, np.linalg.norm(ref)))
    np.testing.assert_allclose(fd_gradient(e, x), ref, atol=1e-8)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000))
def test_support_equals_directional_derivative_at_kinks(seed):
    """On the regular class the support of the subdifferential is the one-sided directional derivative."""
    rng = np.random.default_rng(seed)
    n = 2
    x = rng.normal(size=n)
    terms = tuple(AbsTerm(float(rng.random() + 0.1), rng.normal(size=n), 0.0) for _ in range(2))
    terms = tuple(AbsTerm(t.weight, t.a, float(t.a @ x)) for t in terms)  # kinks pass through x
    e = ScalarExpr(float(rng.normal()), rng.normal(size=n), np.eye(n), terms)
    P = subdiff_scalar(e, x)
    t = 1e-7
    for _ in range(5):
        d = rng.normal(size=n)
        one_sided = (naive_eval(e, x + t * d) - naive_eval(e, x)) / t
        assert support_value(P, d) == pytest.approx(one_sided, abs=1e-5)
