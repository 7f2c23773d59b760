"""Refuting highly robust weak efficiency through a failure of proper efficiency.

If every feasible direction admits a scenario with ``<u_i, d> > 0`` for all
``i``, a highly robust weakly efficient point must be properly efficient for
the nominal problem. Exhibiting unbounded tradeoff ratios at an efficient
point therefore refutes high robustness.
"""

from __future__ import annotations

import numpy as np

from ..geometry import support_value
from ..model import UncertainMOP, feasible_mask
from ..scenarios import _sphere_net, component_sets
from .scan import DEFAULT_GRID, build_lattice, grid_efficiency
from .verdict import Verdict

DEFAULT_M_LIST = (1e1, 1e2, 1e3, 1e4)
STRICT_TOL = 1e-9
DIFF_TOL = 1e-13


def tradeoff_ratios(F: np.ndarray, fbar: np.ndarray) -> np.ndarray:
    """Largest Geoffrion tradeoff ratio offered by each row of objective values.

    For a point improving objective ``i``, the ratio is the gain in ``i``
    over the largest loss among the worsened objectives. Rows that improve
    nothing, or lose nothing measurable, carry no tradeoff information and get
    0: near the candidate a true tie cannot be told apart from rounding, so
    nominal efficiency is left to the lattice precondition.
    """
    D = F - fbar
    gain = np.where(D < -DIFF_TOL, -D, 0.0)
    loss = np.where(D > DIFF_TOL, D, 0.0)
    worst_loss = loss.max(axis=1)
    best_gain = gain.max(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(worst_loss > 0, best_gain / worst_loss, 0.0)


def _boundary_points(p: UncertainMOP, xbar, D: np.ndarray, radius: float, steps: int = 48) -> np.ndarray:
    """Farthest feasible point along each ray ``xbar + t d`` with ``t <= radius`` (bisection)."""
    lo = np.zeros(D.shape[0])
    hi = np.full(D.shape[0], radius)
    lo_box, hi_box = p.box_bounds
    ok_far = feasible_mask(p, xbar + radius * D, tol=0.0, refine=False)
    lo[ok_far] = radius
    todo = ~ok_far
    for _ in range(steps):
        if not todo.any():
            break
        mid = 0.5 * (lo + hi)
        ok = feasible_mask(p, xbar + mid[:, None] * D, tol=0.0, refine=False)
        lo = np.where(todo & ok, mid, lo)
        hi = np.where(todo & ~ok, mid, hi)
    P = xbar + lo[:, None] * D
    keep = (lo > 0) & np.all(P >= lo_box - 1e-12, axis=1) & np.all(P <= hi_box + 1e-12, axis=1)
    return P[keep]


def _ray_samples(p: UncertainMOP, P: np.ndarray, xbar) -> np.ndarray:
    fracs = np.array([1.0, 0.5, 0.1, 0.01])
    S = (xbar + fracs[:, None, None] * (P - xbar)[None, :, :]).reshape(-1, P.shape[1])
    return S[feasible_mask(p, S, tol=0.0)]


def _refine_directions(best: np.ndarray, width: float, count: int, seed: int) -> np.ndarray:
    n = best.size
    if n == 1:
        return best[None, :]
    if n == 2:
        th0 = np.arctan2(best[1], best[0])
        th = th0 + np.linspace(-width, width, count)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    Z = _sphere_net(n, count, seed)
    D = best[None, :] + width * Z
    return D / np.linalg.norm(D, axis=1, keepdims=True)


def proper_refuter(p: UncertainMOP, xbar, direction_net: int = 720, M_list=DEFAULT_M_LIST,
                   radius: float | None = None, grid: int = DEFAULT_GRID, rounds: int = 30,
                   seed: int = 0) -> Verdict:
    """Refute highly robust weak efficiency via unbounded tradeoffs under the direction condition."""
    lat = build_lattice(p, xbar, radius, grid)
    xbar = lat.xbar
    M_max = float(max(M_list))
    res = {**lat.resolution(), "M_list": [float(m) for m in M_list], "direction_net": direction_net}
    if grid_efficiency(p, xbar, np.zeros((p.p, p.n)), "efficient", lattice=lat) is not None:
        return Verdict.inconclusive(res, "candidate is not efficient for the nominal problem on the lattice")

    # candidate points: lattice plus boundary points along rays, refined toward the steepest tradeoff
    D0 = _sphere_net(p.n, direction_net, seed)
    B = _boundary_points(p, xbar, D0, lat.radius)
    pts = [lat.X, _ray_samples(p, B, xbar) if B.shape[0] else np.zeros((0, p.n))]
    cand = np.vstack(pts)
    ratios = tradeoff_ratios(p.nominal_values(cand), lat.fbar) if cand.shape[0] else np.zeros(0)
    width = np.pi / 8
    for r in range(rounds):
        if not cand.shape[0] or ratios.max() > M_max:
            break
        k = int(np.argmax(ratios))
        best = cand[k] - xbar
        D = _refine_directions(best / np.linalg.norm(best), width, 41, seed + r)
        Bn = _boundary_points(p, xbar, D, lat.radius)
        new = _ray_samples(p, Bn, xbar) if Bn.shape[0] else Bn
        if new.shape[0]:
            rn = tradeoff_ratios(p.nominal_values(new), lat.fbar)
            cand = np.vstack([cand, new])
            ratios = np.concatenate([ratios, rn])
        width *= 0.25

    # direction condition on the sampled feasible directions
    sets = component_sets(p)
    dirs = cand - xbar
    norms = np.linalg.norm(dirs, axis=1)
    dirs = dirs[norms > 0] / norms[norms > 0, None]
    cond = all(all(support_value(S, d) > STRICT_TOL for S in sets) for d in dirs)
    res["candidates"] = int(cand.shape[0])
    if not cand.shape[0]:
        return Verdict.inconclusive(res, "no feasible points sampled around the candidate")
    k = int(np.argmax(ratios))
    best_ratio = float(ratios[k])
    evidence = {"x": cand[k].copy(), "tradeoff_ratio": best_ratio, "M_max": M_max, "direction_condition": cond}
    if not cond:
        return Verdict.inconclusive(res, "direction condition fails for some sampled direction", evidence)
    if best_ratio > M_max:
        return Verdict.refuted_by(evidence, res, "tradeoff ratio exceeds every M; candidate is not properly efficient")
    return Verdict.inconclusive(res, "tradeoff ratios stay bounded by some M in the sweep", evidence)
