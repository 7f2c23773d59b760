"""Polytope-valued subdifferentials for the regular expression class.

On this class the limiting and Clarke subdifferentials coincide and are
computed exactly as a Minkowski sum of one piece per term.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, UnsupportedExpression
from .geometry import Polytope, minkowski_sum
from .model import (ACT_TOL, SURROGATE_FUNCTIONS, AffineInX, FiniteScenarios, ScalarExpr,
                    UncertainMOP, _vec, eval_scalar)


def _surrogate_piece(term, x, act_tol):
    t = float(term.a @ x - term.b)
    if abs(t) > act_tol:
        deriv = SURROGATE_FUNCTIONS[term.fn][1](t)
        return Polytope.point(term.weight * deriv * term.a)
    if term.subgradients is None:
        raise UnsupportedExpression(
            f"{term.fn} term is not differentiable at this point and lists no subgradients")
    return Polytope(term.subgradients)


def subdiff_scalar(expr: ScalarExpr, xbar, act_tol: float = ACT_TOL) -> Polytope:
    """Subdifferential of ``expr`` at ``xbar`` as a bounded generator polytope.

    Kinks within ``act_tol`` contribute their full segment; max terms
    contribute the hull of the gradients of the pieces active within ``act_tol``.
    """
    if not isinstance(expr, ScalarExpr):
        raise UnsupportedExpression(f"unsupported node {type(expr).__name__}")
    x = _vec(xbar, expr.n, "xbar")
    parts = [(1.0, Polytope.point(expr.smooth.gradient(x)))]
    for t in expr.abs_terms:
        r = float(t.a @ x - t.b)
        if abs(r) <= act_tol:
            parts.append((t.weight, Polytope(np.stack([-t.a, t.a]))))
        else:
            parts.append((t.weight, Polytope.point(np.sign(r) * t.a)))
    for m in expr.max_terms:
        vals = np.array([p.value(x[None, :])[0] for p in m.pieces])
        top = vals.max()
        grads = [p.gradient(x) for p, v in zip(m.pieces, vals) if v >= top - act_tol]
        parts.append((1.0, Polytope(np.stack(grads))))
    for s in expr.surrogate_terms:
        parts.append((1.0, _surrogate_piece(s, x, act_tol)))
    return minkowski_sum(parts)


def subdiff_objective_scenario(p: UncertainMOP, i: int, xbar, u_i, act_tol: float = ACT_TOL) -> Polytope:
    """Subdifferential of ``f_i(., u_i) = f_i - u_i.x``: the nominal one shifted by ``-u_i``."""
    if not 0 <= i < p.p:
        raise IndexError(f"objective index {i} out of range (p = {p.p})")
    return subdiff_scalar(p.objectives[i], xbar, act_tol).translate(-_vec(u_i, p.n, "u_i"))


def subdiff_constraint(p: UncertainMOP, j: int, xbar, v: float, act_tol: float = ACT_TOL) -> Polytope:
    """Subdifferential in ``x`` of ``g_j(., v)`` at ``xbar``."""
    if not 0 <= j < p.q:
        raise IndexError(f"constraint index {j} out of range (q = {p.q})")
    g = p.constraints[j]
    if not g.domain.in_closure(float(v)):
        raise DomainError(f"parameter {v} lies outside the closure of the domain of constraint {j}")
    if isinstance(g, AffineInX):
        A, _ = g.coefficients([float(v)])
        return Polytope.point(A[0])
    if isinstance(g, FiniteScenarios):
        return subdiff_scalar(g.expr_at(float(v)), xbar, act_tol)
    raise UnsupportedExpression(f"unsupported constraint kind {type(g).__name__}")


def fd_gradient(expr: ScalarExpr, xbar, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient."""
    if not h > 0:
        raise ValueError("step h must be positive")
    x = _vec(xbar, expr.n, "xbar")
    E = np.eye(expr.n) * h
    return (eval_scalar(expr, x + E) - eval_scalar(expr, x - E)) / (2 * h)
