"""Problem representation: nonsmooth expressions, parametric constraints, uncertain MOPs.

An objective or constraint piece is a :class:`ScalarExpr`::

    constant + linear.x + 1/2 x^T Q x + sum_k w_k |a_k.x - b_k| + sum_m max_l piece_l(x)

with ``w_k >= 0`` and smooth (affine or quadratic) max pieces, so every
expression is Clarke regular and its limiting and Clarke subdifferentials agree.

Constraints ``g_j(x, v) <= 0`` are required for every parameter ``v`` in a
one-dimensional domain. ``G_j(x) = sup_v g_j(x, v)`` is evaluated on a dense
grid over the closed hull of the domain and refined by golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DimensionError, DomainError, UnsupportedExpression, ValidationError
from .geometry import UncertaintySet

ACT_TOL = 1e-8
DEFAULT_GRID = 1001
GOLDEN_TOL = 1e-10
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _vec(a, n=None, name="vector") -> np.ndarray:
    v = np.atleast_1d(np.asarray(a, dtype=float)).ravel()
    if n is not None and v.size != n:
        raise DimensionError(f"{name} has length {v.size}, expected {n}")
    v.setflags(write=False)
    return v


def _points(X, n):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != n:
        raise DimensionError(f"point has length {X2.shape[1]}, expected {n}")
    return X2, single


@dataclass(frozen=True, eq=False)
class SmoothPiece:
    """``constant + linear.x + 1/2 x^T quad x``."""

    constant: float
    linear: np.ndarray
    quad: np.ndarray | None = None

    def __post_init__(self):
        lin = _vec(self.linear, name="linear")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "constant", float(self.constant))
        if self.quad is not None:
            Q = np.atleast_2d(np.asarray(self.quad, dtype=float))
            if Q.shape != (lin.size, lin.size):
                raise DimensionError("quadratic term must be n x n")
            if np.max(np.abs(Q - Q.T)) > 1e-12:
                raise ValidationError("quadratic term must be symmetric")
            Q.setflags(write=False)
            object.__setattr__(self, "quad", Q)

    @property
    def dim(self) -> int:
        return self.linear.size

    def value(self, X: np.ndarray) -> np.ndarray:
        out = self.constant + X @ self.linear
        if self.quad is not None:
            out = out + 0.5 * np.einsum("ij,jk,ik->i", X, self.quad, X)
        return out

    def gradient(self, x: np.ndarray) -> np.ndarray:
        g = np.array(self.linear, dtype=float)
        if self.quad is not None:
            g = g + self.quad @ x
        return g


@dataclass(frozen=True, eq=False)
class AbsTerm:
    """``weight * |a.x - b|`` with ``weight >= 0``."""

    weight: float
    a: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.weight):
            raise ValidationError("abs weight must be finite")
        if self.weight < 0:
            raise UnsupportedExpression(
                "negative abs weight gives a concave kink outside the Clarke-regular class")
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "a", _vec(self.a, name="abs term a"))
        object.__setattr__(self, "b", float(self.b))


@dataclass(frozen=True, eq=False)
class MaxTerm:
    pieces: tuple

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValidationError("max term needs at least one piece")
        if not all(isinstance(p, SmoothPiece) for p in pieces):
            raise UnsupportedExpression("max pieces must be smooth (affine or quadratic)")
        object.__setattr__(self, "pieces", pieces)


def _x2sin_inv(t):
    t = np.asarray(t, dtype=float)
    safe = np.where(t == 0, 1.0, t)
    return np.where(t == 0, 0.0, t * t * np.sin(1.0 / safe))


def _x2sin_inv_prime(t):
    return 2 * t * math.sin(1.0 / t) - math.cos(1.0 / t)


# name -> (value, derivative away from the singular point)
SURROGATE_FUNCTIONS: dict[str, tuple[Callable, Callable]] = {
    "cbrt": (np.cbrt, lambda t: (1.0 / 3.0) * abs(t) ** (-2.0 / 3.0)),
    "x2sin_inv": (_x2sin_inv, _x2sin_inv_prime),
}


@dataclass(frozen=True, eq=False)
class SurrogateTerm:
    """``weight * fn(a.x - b)`` for a named function outside the regular class.

    These are local-only nodes. Evaluation is exact everywhere, but a
    subdifferential exists only where ``fn`` is smooth, or where ``subgradients``
    lists explicit generators valid at the point of interest.
    """

    fn: str
    weight: float
    a: np.ndarray
    b: float = 0.0
    subgradients: np.ndarray | None = None

    def __post_init__(self):
        if self.fn not in SURROGATE_FUNCTIONS:
            raise UnsupportedExpression(f"unknown surrogate function {self.fn!r}")
        object.__setattr__(self, "weight", float(self.weight))
        a = _vec(self.a, name="surrogate a")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))
        if self.subgradients is not None:
            G = np.atleast_2d(np.asarray(self.subgradients, dtype=float))
            if G.shape[1] != a.size:
                raise DimensionError("surrogate subgradients must have length n")
            G.setflags(write=False)
            object.__setattr__(self, "subgradients", G)


@dataclass(frozen=True, eq=False)
class ScalarExpr:
    constant: float = 0.0
    linear: np.ndarray | None = None
    quad: np.ndarray | None = None
    abs_terms: tuple = ()
    max_terms: tuple = ()
    surrogate_terms: tuple = ()
    n: int | None = None

    def __post_init__(self):
        n = self.n
        for cand in (self.linear, self.quad):
            if cand is not None and n is None:
                n = np.atleast_1d(np.asarray(cand)).shape[0]
        for t in (*self.abs_terms, *self.surrogate_terms):
            n = t.a.size if n is None else n
        for m in self.max_terms:
            n = m.pieces[0].dim if n is None else n
        if n is None:
            raise ValidationError("cannot infer the dimension of an empty expression")
        lin = np.zeros(n) if self.linear is None else self.linear
        smooth = SmoothPiece(self.constant, lin, self.quad)
        if smooth.dim != n:
            raise DimensionError(f"linear part has length {smooth.dim}, expected {n}")
        abs_terms = tuple(self.abs_terms)
        max_terms = tuple(self.max_terms)
        surrogates = tuple(self.surrogate_terms)
        for t in abs_terms:
            if not isinstance(t, AbsTerm):
                raise UnsupportedExpression(f"unsupported node {type(t).__name__}")
            if t.a.size != n:
                raise DimensionError("abs term dimension mismatch")
        for m in max_terms:
            if not isinstance(m, MaxTerm):
                raise UnsupportedExpression(f"unsupported node {type(m).__name__}")
            if any(p.dim != n for p in m.pieces):
                raise DimensionError("max piece dimension mismatch")
        for s in surrogates:
            if not isinstance(s, SurrogateTerm):
                raise UnsupportedExpression(f"unsupported node {type(s).__name__}")
            if s.a.size != n:
                raise DimensionError("surrogate term dimension mismatch")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "constant", smooth.constant)
        object.__setattr__(self, "linear", smooth.linear)
        object.__setattr__(self, "quad", smooth.quad)
        object.__setattr__(self, "abs_terms", abs_terms)
        object.__setattr__(self, "max_terms", max_terms)
        object.__setattr__(self, "surrogate_terms", surrogates)

    @property
    def smooth(self) -> SmoothPiece:
        return SmoothPiece(self.constant, self.linear, self.quad)

    @property
    def local_only(self) -> bool:
        return bool(self.surrogate_terms)

    def __call__(self, X):
        return eval_scalar(self, X)

    def shifted(self, u) -> "ScalarExpr":
        """The expression ``self(x) - u.x``."""
        return replace(self, linear=self.linear - _vec(u, self.n, "shift"))


def eval_scalar(expr: ScalarExpr, x):
    """Value of ``expr`` at one point (returns float) or at each row of a matrix."""
    X, single = _points(x, expr.n)
    out = expr.smooth.value(X)
    for t in expr.abs_terms:
        out = out + t.weight * np.abs(X @ t.a - t.b)
    for m in expr.max_terms:
        out = out + np.max(np.stack([p.value(X) for p in m.pieces]), axis=0)
    for s in expr.surrogate_terms:
        out = out + s.weight * SURROGATE_FUNCTIONS[s.fn][0](X @ s.a - s.b)
    return float(out[0]) if single else out


# ---------------------------------------------------------------- parameters


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise ValidationError("interval domain needs finite lo < hi")

    def grid(self, resolution: int) -> np.ndarray:
        if resolution < 2:
            raise ValueError("grid_resolution must be at least 2 for interval domains")
        return np.linspace(self.lo, self.hi, int(resolution))

    def contains(self, v: float, tol: float = 0.0) -> bool:
        lo_ok = v >= self.lo - tol if self.lo_closed else v > self.lo + tol
        hi_ok = v <= self.hi + tol if self.hi_closed else v < self.hi - tol
        return bool(lo_ok and hi_ok)

    def in_closure(self, v: float, tol: float = 1e-12) -> bool:
        return self.lo - tol <= v <= self.hi + tol


@dataclass(frozen=True)
class FiniteDomain:
    values: tuple

    def __post_init__(self):
        vals = sorted(set(float(v) for v in self.values))
        if not vals:
            raise ValidationError("finite domain must be nonempty")
        if list(map(float, self.values)) != vals:
            raise ValidationError("finite domain must be sorted and deduplicated")
        object.__setattr__(self, "values", tuple(vals))

    def grid(self, resolution: int = 0) -> np.ndarray:
        return np.array(self.values)

    def contains(self, v: float, tol: float = 1e-12) -> bool:
        return any(abs(v - w) <= tol for w in self.values)

    in_closure = contains


ParamDomain = Union[Interval, FiniteDomain]


@dataclass(frozen=True)
class CoefFn:
    """Sum of basis expansions in one real parameter.

    ``poly``: ``sum_k c_k v^k``; ``sin``/``cos``: ``sum_k c_k sin((k+1) v)``.
    """

    terms: tuple  # of (basis, coeffs)

    def __post_init__(self):
        terms = tuple((str(b), tuple(float(c) for c in cs)) for b, cs in self.terms)
        for b, _ in terms:
            if b not in ("poly", "sin", "cos"):
                raise ValidationError(f"unknown coefficient basis {b!r}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def constant(cls, c: float) -> "CoefFn":
        return cls((("poly", (c,)),))

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        for basis, cs in self.terms:
            for k, c in enumerate(cs):
                if basis == "poly":
                    out = out + c * v ** k
                elif basis == "sin":
                    out = out + c * np.sin((k + 1) * v)
                else:
                    out = out + c * np.cos((k + 1) * v)
        return out


@dataclass(frozen=True, eq=False)
class AffineInX:
    """``g(x, v) = a(v).x - b(v)``."""

    a: tuple  # n CoefFn
    b: CoefFn
    domain: ParamDomain

    @property
    def dim(self) -> int:
        return len(self.a)

    def coefficients(self, V) -> tuple[np.ndarray, np.ndarray]:
        V = np.atleast_1d(np.asarray(V, dtype=float))
        A = np.stack([np.broadcast_to(f(V), V.shape) for f in self.a], axis=1)
        return A, np.broadcast_to(self.b(V), V.shape)

    def values(self, X: np.ndarray, V) -> np.ndarray:
        A, b = self.coefficients(V)
        return X @ A.T - b[None, :]


@dataclass(frozen=True, eq=False)
class FiniteScenarios:
    """One expression per parameter label; the domain is the set of labels."""

    scenarios: tuple  # of (label, ScalarExpr)
    domain: FiniteDomain = field(init=False)

    def __post_init__(self):
        sc = tuple((float(v), e) for v, e in self.scenarios)
        if not sc:
            raise ValidationError("finite-scenario constraint needs at least one scenario")
        sc = tuple(sorted(sc, key=lambda t: t[0]))
        labels = [v for v, _ in sc]
        if len(set(labels)) != len(labels):
            raise ValidationError("scenario labels must be distinct")
        object.__setattr__(self, "scenarios", sc)
        object.__setattr__(self, "domain", FiniteDomain(tuple(labels)))

    @property
    def dim(self) -> int:
        return self.scenarios[0][1].n

    def expr_at(self, v: float) -> ScalarExpr:
        for label, e in self.scenarios:
            if abs(label - v) <= 1e-12:
                return e
        raise DomainError(f"parameter {v} is not a scenario label")

    def values(self, X: np.ndarray, V) -> np.ndarray:
        V = np.atleast_1d(np.asarray(V, dtype=float))
        return np.stack([eval_scalar(self.expr_at(v), X) for v in V], axis=1).reshape(X.shape[0], V.size)


ParamConstraint = Union[AffineInX, FiniteScenarios]


@dataclass(frozen=True, eq=False)
class UncertainMOP:
    """Objectives ``f_i(x) - u_i.x`` with ``u_i in U_i`` and robust constraints.

    ``diagonal`` marks a problem whose scenarios are restricted to
    ``u_1 = ... = u_p`` drawn from the shared set ``uncertainty[0]``.
    """

    n: int
    objectives: tuple
    uncertainty: tuple
    constraints: tuple = ()
    box_bounds: tuple | None = None
    diagonal: bool = False

    def __post_init__(self):
        objs = tuple(self.objectives)
        unc = tuple(self.uncertainty)
        cons = tuple(self.constraints)
        if len(objs) < 2:
            raise ValidationError("a multi-objective problem needs p >= 2 objectives")
        if len(unc) != len(objs):
            raise ValidationError("need one uncertainty set per objective")
        for f in objs:
            if f.n != self.n:
                raise DimensionError("objective dimension differs from n")
        for U in unc:
            if U.dim != self.n:
                raise DimensionError("uncertainty set dimension differs from n")
        for g in cons:
            if g.dim != self.n:
                raise DimensionError("constraint dimension differs from n")
        bb = self.box_bounds
        if bb is not None:
            lo, hi = _vec(bb[0], self.n, "box lo"), _vec(bb[1], self.n, "box hi")
            if np.any(lo > hi):
                raise ValidationError("box_bounds require lo <= hi")
            bb = (lo, hi)
        object.__setattr__(self, "objectives", objs)
        object.__setattr__(self, "uncertainty", unc)
        object.__setattr__(self, "constraints", cons)
        object.__setattr__(self, "box_bounds", bb)

    @property
    def p(self) -> int:
        return len(self.objectives)

    @property
    def q(self) -> int:
        return len(self.constraints)

    def nominal_values(self, X) -> np.ndarray:
        X2, _ = _points(X, self.n)
        return np.stack([eval_scalar(f, X2) for f in self.objectives], axis=1)


def eval_objective_scenario(p: UncertainMOP, x, u) -> np.ndarray:
    """``(f_i(x) - u_i.x)_i``."""
    x = _vec(x, p.n, "x")
    U = np.atleast_2d(np.asarray(u, dtype=float))
    if U.shape != (p.p, p.n):
        raise DimensionError(f"scenario must be {p.p} vectors of length {p.n}")
    return np.array([eval_scalar(f, x) - U[i] @ x for i, f in enumerate(p.objectives)])


# ---------------------------------------------------------------- suprema


@dataclass(frozen=True)
class SupResult:
    value: float
    arg_set: tuple
    attained_outside_domain: bool = False


def _golden_max(func, lo, hi, tol=GOLDEN_TOL):
    """Maximise a unimodal scalar function on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = func(d)
    cands = [(func(lo), lo), (func(hi), hi), (fc, c), (fd, d)]
    best = max(cands, key=lambda t: t[0])
    return best[1], best[0]


def _constraint(p: UncertainMOP, j: int) -> ParamConstraint:
    if not 0 <= j < p.q:
        raise IndexError(f"constraint index {j} out of range (q = {p.q})")
    return p.constraints[j]


def _scan(g: ParamConstraint, x: np.ndarray, grid_resolution: int):
    V = g.domain.grid(grid_resolution)
    vals = g.values(x[None, :], V)[0]
    return V, vals


def _local_maxima(V, vals, g, x):
    """Refined local maximisers of ``g(x, .)`` seeded from a grid scan."""
    if isinstance(g.domain, FiniteDomain):
        return list(zip(V, vals))
    out = []
    k = len(V)
    for i in range(k):
        left = vals[i - 1] if i > 0 else -np.inf
        right = vals[i + 1] if i < k - 1 else -np.inf
        if vals[i] >= left and vals[i] >= right:
            lo, hi = V[max(i - 1, 0)], V[min(i + 1, k - 1)]
            f = lambda v: float(g.values(x[None, :], [v])[0, 0])
            v, fv = _golden_max(f, lo, hi)
            out.append((v, fv) if fv >= vals[i] else (V[i], vals[i]))
    return out


def _cluster(vs, tol=1e-7):
    vs = sorted(vs)
    kept = []
    for v in vs:
        if not kept or v - kept[-1] > tol:
            kept.append(v)
    return kept


def constraint_sup(p: UncertainMOP, j: int, x, grid_resolution: int = DEFAULT_GRID,
                   act_tol: float = ACT_TOL) -> SupResult:
    """``G_j(x) = sup_v g_j(x, v)`` with the maximisers found.

    Interval domains are scanned over their closed hull. A maximiser sitting
    at an excluded endpoint keeps its value but is dropped from ``arg_set``;
    ``attained_outside_domain`` is set when nothing attains the supremum.
    """
    g = _constraint(p, j)
    x = _vec(x, p.n, "x")
    V, vals = _scan(g, x, grid_resolution)
    maxima = _local_maxima(V, vals, g, x)
    best = max(fv for _, fv in maxima)
    near = [v for v, fv in maxima if fv >= best - act_tol]
    # flat stretches: every grid point within tolerance is a maximiser too
    near += [v for v, fv in zip(V, vals) if fv >= best - act_tol]
    args = [v for v in _cluster(near) if g.domain.contains(v, tol=0.0) or _endpoint_closed(g.domain, v)]
    outside = not args
    return SupResult(float(best), tuple(float(v) for v in args), outside)


def _endpoint_closed(domain, v, tol=1e-12):
    if isinstance(domain, FiniteDomain):
        return domain.contains(v)
    if abs(v - domain.lo) <= tol:
        return domain.lo_closed
    if abs(v - domain.hi) <= tol:
        return domain.hi_closed
    return domain.lo < v < domain.hi


def active_set(p: UncertainMOP, j: int, xbar, eps: float = 0.0,
               grid_resolution: int = DEFAULT_GRID, act_tol: float = ACT_TOL) -> tuple:
    """``{v : g_j(xbar, v) >= G_j(xbar) - eps}`` on the discretised domain."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    sup = constraint_sup(p, j, xbar, grid_resolution, act_tol)
    if eps == 0:
        return sup.arg_set
    g = p.constraints[j]
    x = _vec(xbar, p.n, "x")
    V, vals = _scan(g, x, grid_resolution)
    hits = [float(v) for v, fv in zip(V, vals) if fv >= sup.value - eps and _endpoint_closed(g.domain, v)]
    return tuple(_cluster(list(sup.arg_set) + hits, tol=0.0))


def constraint_sup_batch(p: UncertainMOP, j: int, X, grid_resolution: int = DEFAULT_GRID,
                         refine_band: float = 1e-4) -> np.ndarray:
    """Vectorised ``G_j`` over the rows of ``X``.

    The grid maximum is exact on finite domains; on intervals, rows whose grid
    maximum lies within ``refine_band`` of zero get the full refined supremum so
    that feasibility decisions near the boundary are not resolution-limited.
    """
    g = _constraint(p, j)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    V = g.domain.grid(grid_resolution)
    G = g.values(X, V).max(axis=1)
    if isinstance(g.domain, Interval):
        for r in np.flatnonzero(np.abs(G) <= refine_band):
            G[r] = constraint_sup(p, j, X[r], grid_resolution).value
    return G


def is_robust_feasible(p: UncertainMOP, x, tol: float = 1e-9, grid_resolution: int = DEFAULT_GRID) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return all(constraint_sup(p, j, x, grid_resolution).value <= tol for j in range(p.q))


def feasible_mask(p: UncertainMOP, X, tol: float = 1e-9, grid_resolution: int = DEFAULT_GRID,
                  refine: bool = True) -> np.ndarray:
    """Robust feasibility of every row of ``X``; ``refine=False`` trusts the grid maximum."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mask = np.ones(X.shape[0], dtype=bool)
    band = 1e-4 if refine else -1.0
    for j in range(p.q):
        mask &= constraint_sup_batch(p, j, X, grid_resolution, refine_band=band) <= tol
    return mask
