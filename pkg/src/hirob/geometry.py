"""Convex sets in V-representation and the LP-backed queries run against them.

Every certifier reduces to a handful of questions about convex sets: what is
the support value in a direction, does a set contain a point, what is the
Minkowski sum of scaled polytopes, and does a system of strict linear
inequalities have a solution.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import CombinatorialBlowup, DimensionError, SolverError, ValidationError
from .lp import linprog

DEDUP_TOL = 1e-12
RAY_TOL = 1e-12
STRICT_TOL = 1e-9
MINKOWSKI_CAP = 200_000


def _frozen(a, ndim=None):
    arr = np.array(a, dtype=float)
    if ndim == 2 and arr.ndim == 1:
        arr = arr[None, :] if arr.size else arr.reshape(0, 0)
    arr.setflags(write=False)
    return arr


def _dedup(rows: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    kept: list[np.ndarray] = []
    for r in rows:
        if not any(np.max(np.abs(r - k)) <= tol for k in kept):
            kept.append(r)
    return np.array(kept).reshape(len(kept), rows.shape[1])


@dataclass(frozen=True, eq=False)
class Polytope:
    """Generators of ``conv(vertices) + cone(rays)``.

    Vertices are deduplicated but redundant (interior) generators are kept.
    """

    vertices: np.ndarray
    rays: np.ndarray = field(default=None)

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.size == 0 or V.shape[0] == 0:
            raise ValidationError("polytope needs at least one vertex")
        n = V.shape[1]
        R = np.zeros((0, n)) if self.rays is None else np.asarray(self.rays, dtype=float).reshape(-1, n)
        if not (np.all(np.isfinite(V)) and np.all(np.isfinite(R))):
            raise ValidationError("polytope generators must be finite")
        if R.shape[0] and np.any(np.linalg.norm(R, axis=1) <= RAY_TOL):
            raise ValidationError("ray vectors must be nonzero")
        object.__setattr__(self, "vertices", _frozen(_dedup(V)))
        object.__setattr__(self, "rays", _frozen(R))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def bounded(self) -> bool:
        return self.rays.shape[0] == 0

    def translate(self, t) -> "Polytope":
        return Polytope(self.vertices + np.asarray(t, dtype=float), self.rays)

    @classmethod
    def point(cls, x) -> "Polytope":
        return cls(np.atleast_2d(np.asarray(x, dtype=float)))


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = np.atleast_1d(np.asarray(self.lo, dtype=float)), np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape:
            raise DimensionError("box bounds differ in length")
        if np.any(lo > hi):
            raise ValidationError("box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    @property
    def dim(self) -> int:
        return self.lo.size

    def corners(self) -> np.ndarray:
        return np.array(list(itertools.product(*zip(self.lo, self.hi))))


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError("ball radius must be positive")
        object.__setattr__(self, "center", _frozen(np.atleast_1d(self.center)))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.size


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{u : (u - c)^T shape^{-1} (u - c) <= 1}``."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        A = np.atleast_2d(np.asarray(self.shape, dtype=float))
        if A.shape != (c.size, c.size):
            raise DimensionError("ellipsoid shape must be n x n")
        if np.max(np.abs(A - A.T)) > 1e-12:
            raise ValidationError("ellipsoid shape must be symmetric")
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            raise ValidationError("ellipsoid shape must be positive definite") from None
        object.__setattr__(self, "center", _frozen(c))
        object.__setattr__(self, "shape", _frozen(A))
        object.__setattr__(self, "_chol", _frozen(L))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def chol(self) -> np.ndarray:
        return self._chol


@dataclass(frozen=True, eq=False)
class FiniteSet:
    points: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        if P.shape[0] == 0 or P.size == 0:
            raise ValidationError("finite uncertainty set needs at least one point")
        object.__setattr__(self, "points", _frozen(P))

    @property
    def dim(self) -> int:
        return self.points.shape[1]


UncertaintySet = Union[Polytope, Box, Ball, Ellipsoid, FiniteSet]


def same_set(a: UncertaintySet, b: UncertaintySet, tol: float = 1e-12) -> bool:
    """Structural identity: same kind and same data within ``tol``."""
    if type(a) is not type(b) or a.dim != b.dim:
        return False
    if isinstance(a, Polytope):
        pairs = [(a.vertices, b.vertices), (a.rays, b.rays)]
    elif isinstance(a, Box):
        pairs = [(a.lo, b.lo), (a.hi, b.hi)]
    elif isinstance(a, Ball):
        pairs = [(a.center, b.center), (np.array([a.radius]), np.array([b.radius]))]
    elif isinstance(a, Ellipsoid):
        pairs = [(a.center, b.center), (a.shape, b.shape)]
    else:
        pairs = [(a.points, b.points)]
    return all(x.shape == y.shape and (x.size == 0 or np.max(np.abs(x - y)) <= tol) for x, y in pairs)


def support_value(S, d) -> float:
    """``sup {d . s : s in S}``, ``+inf`` along a recession direction."""
    d = np.asarray(d, dtype=float).ravel()
    if S.dim != d.size:
        raise DimensionError(f"direction has length {d.size}, set lives in R^{S.dim}")
    if isinstance(S, Polytope):
        if S.rays.shape[0] and np.any(S.rays @ d > RAY_TOL):
            return np.inf
        return float(np.max(S.vertices @ d))
    if isinstance(S, Box):
        return float(np.sum(np.where(d >= 0, S.hi * d, S.lo * d)))
    if isinstance(S, Ball):
        return float(S.center @ d + S.radius * np.linalg.norm(d))
    if isinstance(S, Ellipsoid):
        return float(S.center @ d + np.sqrt(max(d @ S.shape @ d, 0.0)))
    if isinstance(S, FiniteSet):
        return float(np.max(S.points @ d))
    raise TypeError(f"unsupported set type {type(S).__name__}")


def support_point(S, d, *, target: float | None = None) -> np.ndarray:
    """A point of ``S`` attaining (or, for unbounded sets, exceeding) the support in ``d``.

    For a polytope whose support in ``d`` is infinite, ``target`` selects how
    far along the ray to go: the returned point has ``d . u >= target + 1``.
    """
    d = np.asarray(d, dtype=float).ravel()
    if isinstance(S, Polytope):
        k = int(np.argmax(S.vertices @ d))
        w = S.vertices[k].copy()
        if S.rays.shape[0]:
            slopes = S.rays @ d
            t = int(np.argmax(slopes))
            if slopes[t] > RAY_TOL:
                goal = (0.0 if target is None else target) + 1.0
                gamma = max(0.0, (goal - w @ d) / slopes[t])
                w = w + gamma * S.rays[t]
        return w
    if isinstance(S, Box):
        return np.where(d >= 0, S.hi, S.lo).astype(float)
    if isinstance(S, Ball):
        nd = np.linalg.norm(d)
        return S.center.copy() if nd == 0 else S.center + S.radius * d / nd
    if isinstance(S, Ellipsoid):
        q = np.sqrt(max(d @ S.shape @ d, 0.0))
        return S.center.copy() if q == 0 else S.center + S.shape @ d / q
    if isinstance(S, FiniteSet):
        return S.points[int(np.argmax(S.points @ d))].copy()
    raise TypeError(f"unsupported set type {type(S).__name__}")


def membership_residual(P: Polytope, y) -> float:
    """Smallest infinity-norm distance from ``y`` to the generated set (LP)."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size != P.dim:
        raise DimensionError(f"point has length {y.size}, polytope lives in R^{P.dim}")
    V, R = P.vertices, P.rays
    k, m, n = V.shape[0], R.shape[0], P.dim
    # variables: alpha (k) >= 0, beta (m) >= 0, s >= 0
    G = np.hstack([V.T, R.T]) if m else V.T
    nv = k + m + 1
    c = np.zeros(nv)
    c[-1] = 1.0
    A_ub = np.vstack([
        np.hstack([G, -np.ones((n, 1))]),
        np.hstack([-G, -np.ones((n, 1))]),
    ])
    b_ub = np.concatenate([y, -y])
    A_eq = np.zeros((1, nv))
    A_eq[0, :k] = 1.0
    res = linprog(c, A_ub, b_ub, A_eq, [1.0])
    if not res.ok:
        raise SolverError(f"membership LP ended with status {res.status}")
    return max(float(res.x[-1]), 0.0)


def contains_point(P: Polytope, y, tol: float = 1e-9) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return membership_residual(P, y) <= tol


def set_contains(S, u, tol: float = 1e-9) -> bool:
    """Membership test for any uncertainty-set kind."""
    u = np.asarray(u, dtype=float).ravel()
    if u.size != S.dim:
        raise DimensionError(f"point has length {u.size}, set lives in R^{S.dim}")
    if isinstance(S, Polytope):
        return contains_point(S, u, tol)
    if isinstance(S, Box):
        return bool(np.all(u >= S.lo - tol) and np.all(u <= S.hi + tol))
    if isinstance(S, Ball):
        return bool(np.linalg.norm(u - S.center) <= S.radius + tol)
    if isinstance(S, Ellipsoid):
        z = np.linalg.solve(S.chol, u - S.center)
        return bool(np.linalg.norm(z) <= 1.0 + tol)
    if isinstance(S, FiniteSet):
        return bool(np.any(np.max(np.abs(S.points - u), axis=1) <= tol))
    raise TypeError(f"unsupported set type {type(S).__name__}")


def minkowski_sum(parts, cap: int = MINKOWSKI_CAP) -> Polytope:
    """Generator-product Minkowski sum of ``(coefficient, Polytope)`` pairs.

    A zero coefficient contributes ``{0}``: on locally Lipschitz functions the
    singular subdifferential is trivial, which is what the ``0 o P`` convention
    in the multiplier rule reduces to.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("minkowski_sum needs at least one part")
    n = parts[0][1].dim
    vert_lists, rays = [], []
    count = 1
    for coef, P in parts:
        if coef < 0:
            raise ValueError("Minkowski coefficients must be nonnegative")
        if P.dim != n:
            raise DimensionError("Minkowski parts live in different spaces")
        if coef == 0:
            vert_lists.append(np.zeros((1, n)))
            continue
        vert_lists.append(coef * P.vertices)
        if P.rays.shape[0]:
            rays.append(coef * P.rays)
        count *= P.vertices.shape[0]
        if count > cap:
            raise CombinatorialBlowup(f"Minkowski sum would have more than {cap} generators")
    total = vert_lists[0]
    for V in vert_lists[1:]:
        total = (total[:, None, :] + V[None, :, :]).reshape(-1, n)
    R = np.vstack(rays) if rays else None
    return Polytope(total, R)


@dataclass(frozen=True)
class StrictFeasibility:
    feasible: bool
    witness: np.ndarray | None
    margin: float


def solve_strict_feasibility(A_strict, A_weak=(), *, strict_tol: float = STRICT_TOL,
                             box: float = 1.0, weak_slack: float = 1e-12) -> StrictFeasibility:
    """Search ``x`` with ``a.x < rhs`` on strict rows and ``a.x <= rhs`` on weak rows.

    Rows are ``(a, rhs)`` pairs. The LP maximises a common margin ``t`` on the
    strict rows inside the box ``||x||_inf <= box`` (``t`` is capped at 1 so the
    LP stays bounded). A witness is reported only when ``t* > strict_tol``.
    Weak rows get ``weak_slack`` of room to absorb rounding in their data.
    """
    strict = [(np.asarray(a, dtype=float).ravel(), float(b)) for a, b in A_strict]
    weak = [(np.asarray(a, dtype=float).ravel(), float(b)) for a, b in A_weak]
    rows = strict + weak
    if not rows:
        raise ValueError("empty inequality system")
    n = rows[0][0].size
    if any(a.size != n for a, _ in rows):
        raise DimensionError("inequality rows have inconsistent lengths")
    ns = len(strict)
    A = np.zeros((len(rows), n + 1))
    b = np.zeros(len(rows))
    for i, (a, rhs) in enumerate(rows):
        A[i, :n] = a
        b[i] = rhs
        if i < ns:
            A[i, n] = 1.0
        else:
            b[i] += weak_slack
    c = np.zeros(n + 1)
    c[n] = -1.0
    bounds = [(-box, box)] * n + [(None, 1.0) if ns else (0.0, 0.0)]
    res = linprog(c, A, b, bounds=bounds)
    if res.status == "infeasible":
        return StrictFeasibility(False, None, -np.inf)
    if not res.ok:
        raise SolverError(f"strict-feasibility LP ended with status {res.status}")
    x, t = res.x[:n], float(res.x[n])
    if ns == 0:
        return StrictFeasibility(True, x, np.inf)
    # margin recomputed by substitution so callers see what the witness really achieves
    margin = min(rhs - a @ x for a, rhs in strict)
    if margin > strict_tol and t > strict_tol:
        return StrictFeasibility(True, x, float(margin))
    return StrictFeasibility(False, None, float(t))
