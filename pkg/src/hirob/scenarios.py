"""Scenario sets: lattices, vertex-ray reductions and uncertainty-set predicates."""

from __future__ import annotations

import itertools
from dataclasses import InitVar, dataclass, replace

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.stats import qmc

from .errors import CombinatorialBlowup, DimensionError, NotApplicable, ValidationError
from .geometry import Ball, Box, Ellipsoid, FiniteSet, Polytope, same_set, set_contains, support_value
from .model import UncertainMOP

SCENARIO_CAP = 1_000_000
DEFAULT_GAMMA_GRID = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)
MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Scenarios ``u = (u_1, ..., u_p)`` stored as an ``(S, p, n)`` array.

    Every component is checked for membership in its uncertainty set when the
    set is built; ``labels`` records where each scenario came from.
    """

    us: np.ndarray
    labels: tuple
    sets: InitVar[tuple]

    def __post_init__(self, sets):
        us = np.asarray(self.us, dtype=float)
        if us.ndim != 3 or us.shape[0] == 0:
            raise ValidationError("scenario array must have shape (S, p, n) with S >= 1")
        if len(self.labels) != us.shape[0]:
            raise ValidationError("need one label per scenario")
        if len(sets) != us.shape[1]:
            raise DimensionError("need one uncertainty set per scenario component")
        for i, S in enumerate(sets):
            if S.dim != us.shape[2]:
                raise DimensionError("scenario dimension differs from its uncertainty set")
            for u in np.unique(us[:, i, :], axis=0):
                if not set_contains(S, u, MEMBERSHIP_TOL):
                    raise ValidationError(f"scenario component {i} value {u.tolist()} lies outside its set")
        us.setflags(write=False)
        object.__setattr__(self, "us", us)
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    def __len__(self) -> int:
        return self.us.shape[0]

    def __iter__(self):
        return iter(zip(self.us, self.labels))

    @property
    def p(self) -> int:
        return self.us.shape[1]

    def union(self, other: "ScenarioSet", sets) -> "ScenarioSet":
        return ScenarioSet(np.concatenate([self.us, other.us]), self.labels + other.labels, sets)

    @classmethod
    def from_points(cls, problem: UncertainMOP, scenarios, label: str = "given") -> "ScenarioSet":
        us = np.asarray(scenarios, dtype=float).reshape(-1, problem.p, problem.n)
        return cls(us, (label,) * us.shape[0], component_sets(problem))


def component_sets(problem: UncertainMOP) -> tuple:
    """The uncertainty set of each objective, honouring the diagonal flag."""
    if problem.diagonal:
        return (problem.uncertainty[0],) * problem.p
    return problem.uncertainty


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 2 - prev)
        yield out


def _sphere_net(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit vectors: ``+-1`` in R^1, equal angles in R^2, Halton otherwise."""
    if n == 1:
        return np.array([[-1.0], [1.0]])
    if n == 2:
        th = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    from scipy.stats import norm
    h = qmc.Halton(d=n, scramble=True, seed=seed).random(count)
    z = norm.ppf(np.clip(h, 1e-12, 1 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _ball_points(n: int, resolution: int, seed: int) -> tuple[np.ndarray, list]:
    """Unit-ball sample: centre, boundary net and interior low-discrepancy points."""
    pts = [np.zeros((1, n))]
    labels = ["grid"]
    boundary = _sphere_net(n, max(2 * resolution, 4) if n == 2 else resolution ** 2, seed)
    pts.append(boundary)
    labels += ["grid"] * boundary.shape[0]
    h = qmc.Halton(d=n, scramble=True, seed=seed).random(4 * resolution ** n)
    cube = 2.0 * h - 1.0
    inner = cube[np.linalg.norm(cube, axis=1) <= 1.0][: resolution ** n]
    pts.append(inner)
    labels += [f"random({seed})"] * inner.shape[0]
    return np.vstack(pts), labels


def sample_component(S, resolution: int, seed: int = 0) -> tuple[np.ndarray, list]:
    """Points and labels sampling one uncertainty set."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if isinstance(S, FiniteSet):
        return np.array(S.points), ["vertex"] * S.points.shape[0]
    if isinstance(S, Box):
        axes = [np.linspace(lo, hi, resolution) if hi > lo else np.array([lo]) for lo, hi in zip(S.lo, S.hi)]
        pts = np.array(list(itertools.product(*axes)))
        return pts, ["grid"] * pts.shape[0]
    if isinstance(S, Polytope):
        V = S.vertices
        k = V.shape[0]
        steps = resolution - 1
        weights = np.array(list(_compositions(steps, k)), dtype=float) / steps
        pts = [weights @ V]
        labels = ["vertex" if w.max() == 1.0 else "grid" for w in weights]
        if not S.bounded:
            for gamma in np.linspace(0.0, DEFAULT_GAMMA_GRID[-1], resolution)[1:]:
                for r in S.rays:
                    pts.append(V + gamma * r)
                    labels += [f"ray({gamma:g})"] * k
        return np.vstack(pts), labels
    if isinstance(S, Ball):
        unit, labels = _ball_points(S.dim, resolution, seed)
        return S.center + S.radius * unit, labels
    if isinstance(S, Ellipsoid):
        unit, labels = _ball_points(S.dim, resolution, seed)
        return S.center + unit @ S.chol.T, labels
    raise TypeError(f"unsupported set type {type(S).__name__}")


def _product(problem: UncertainMOP, per_component, cap: int, advice: str) -> ScenarioSet:
    sets = component_sets(problem)
    if problem.diagonal:
        pts, labels = per_component[0]
        us = np.repeat(pts[:, None, :], problem.p, axis=1)
        return ScenarioSet(us, tuple(labels), sets)
    total = int(np.prod([len(lbl) for _, lbl in per_component], dtype=float))
    if total > cap:
        raise CombinatorialBlowup(f"scenario product has {total} elements (cap {cap}); {advice}")
    idx = np.array(list(itertools.product(*[range(len(lbl)) for _, lbl in per_component])))
    us = np.stack([per_component[i][0][idx[:, i]] for i in range(problem.p)], axis=1)
    labels = tuple(",".join(per_component[i][1][k] for i, k in enumerate(row)) for row in idx)
    return ScenarioSet(us, labels, sets)


def sample(problem: UncertainMOP, resolution: int, seed: int = 0, cap: int = SCENARIO_CAP) -> ScenarioSet:
    """Deterministic scenario sample: lattices for boxes and polytopes, low-discrepancy points for balls."""
    comps = [problem.uncertainty[0]] if problem.diagonal else list(problem.uncertainty)
    per = [sample_component(S, resolution, seed + i) for i, S in enumerate(comps)]
    return _product(problem, per, cap, "lower the scenario resolution")


def epd_scenarios(problem: UncertainMOP, gamma_grid=DEFAULT_GAMMA_GRID, cap: int = SCENARIO_CAP) -> ScenarioSet:
    """Vertices plus rays scaled by ``gamma_grid``, crossed over the components."""
    gammas = np.asarray(gamma_grid, dtype=float).ravel()
    if gammas.size == 0 or np.any(gammas < 0) or not np.any(gammas == 0):
        raise ValueError("gamma_grid must be nonempty, nonnegative and contain 0")
    gammas = np.unique(gammas)
    comps = [problem.uncertainty[0]] if problem.diagonal else list(problem.uncertainty)
    per = []
    for S in comps:
        if not isinstance(S, Polytope):
            raise NotApplicable("vertex-ray scenarios need polytope uncertainty sets")
        pts, labels = [S.vertices], ["vertex"] * S.vertices.shape[0]
        for g in gammas[gammas > 0]:
            for r in S.rays:
                pts.append(S.vertices + g * r)
                labels += [f"ray({g:g})"] * S.vertices.shape[0]
        per.append((np.vstack(pts), labels))
    return _product(problem, per, cap, "thin gamma_grid")


def diagonal_reduce(problem: UncertainMOP) -> UncertainMOP:
    """Restrict to scenarios ``u_1 = ... = u_p`` when all uncertainty sets coincide."""
    first = problem.uncertainty[0]
    if not all(same_set(first, S) for S in problem.uncertainty[1:]):
        raise NotApplicable("uncertainty sets differ, so the diagonal reduction does not apply")
    return replace(problem, diagonal=True)


def contains_zero_interior(S, margin: float, net: int = 720) -> bool:
    """Whether the ball of radius ``margin`` around the origin lies inside ``S``."""
    if not margin > 0:
        raise ValueError("margin must be positive")
    if isinstance(S, Box):
        return bool(np.all(S.lo <= -margin) and np.all(S.hi >= margin))
    if isinstance(S, Ball):
        return bool(np.linalg.norm(S.center) + margin <= S.radius)
    if isinstance(S, FiniteSet):
        return False
    if isinstance(S, Ellipsoid):
        if not np.any(S.center):
            return bool(np.sqrt(np.linalg.eigvalsh(S.shape)[0]) >= margin)
        D = _sphere_net(S.dim, net)
        return all(support_value(S, d) >= margin for d in D)
    if isinstance(S, Polytope):
        n = S.dim
        if n == 1:
            return support_value(S, [1.0]) >= margin and support_value(S, [-1.0]) >= margin
        pts = S.vertices
        if not S.bounded:
            # truncate the recession cone far away; its cap facets are irrelevant near 0
            far = 1e3 * (1.0 + np.abs(pts).max() + margin)
            pts = np.vstack([pts] + [S.vertices + far * r / np.linalg.norm(r) for r in S.rays])
        try:
            hull = ConvexHull(pts)
        except QhullError:
            return False  # lower-dimensional, empty interior
        return bool(np.all(hull.equations[:, -1] <= -margin))
    raise TypeError(f"unsupported set type {type(S).__name__}")


def norm_sup(S) -> float:
    """Largest Euclidean norm over the set (an upper bound for off-centre ellipsoids)."""
    if isinstance(S, Polytope):
        return np.inf if not S.bounded else float(np.linalg.norm(S.vertices, axis=1).max())
    if isinstance(S, Box):
        return float(np.linalg.norm(np.maximum(np.abs(S.lo), np.abs(S.hi))))
    if isinstance(S, Ball):
        return float(np.linalg.norm(S.center) + S.radius)
    if isinstance(S, Ellipsoid):
        return float(np.linalg.norm(S.center) + np.sqrt(np.linalg.eigvalsh(S.shape)[-1]))
    if isinstance(S, FiniteSet):
        return float(np.linalg.norm(S.points, axis=1).max())
    raise TypeError(f"unsupported set type {type(S).__name__}")
