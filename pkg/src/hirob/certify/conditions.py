"""Subdifferential conditions: necessary-condition refuter, KKT multipliers, CQ2 and generalized convexity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..geometry import Polytope, contains_point, solve_strict_feasibility, support_point, support_value
from ..lp import linprog
from ..model import ACT_TOL, UncertainMOP, _vec, active_set, constraint_sup, eval_scalar
from ..scenarios import ScenarioSet, _sphere_net, component_sets
from ..subdiff import subdiff_constraint, subdiff_scalar
from .verdict import CertificateKind, Verdict

STRICT_TOL = 1e-9
CONE_EPS = 1e-6
COMPLEMENTARITY_TOL = 1e-8
NORMALIZATIONS = ("joint", "lambda")


# ---------------------------------------------------------------- active data


def active_generators(p: UncertainMOP, xbar, eps: float = 0.0, act_tol: float = ACT_TOL) -> dict:
    """Subgradient generators of each constraint over its (eps-)active parameters.

    Only constraints with ``|G_j(xbar)| <= COMPLEMENTARITY_TOL`` count as
    active; the result maps ``j`` to an ``(m, n)`` array of generators.
    """
    out = {}
    for j in range(p.q):
        sup = constraint_sup(p, j, xbar)
        if abs(sup.value) > max(COMPLEMENTARITY_TOL, eps):
            continue
        vs = active_set(p, j, xbar, eps)
        if not vs:
            continue
        gens = np.vstack([subdiff_constraint(p, j, xbar, v, act_tol).vertices for v in vs])
        out[j] = gens
    return out


# ---------------------------------------------------------------- necessary condition


def _cone_rays_2d(rows: np.ndarray) -> list:
    """Boundary rays of ``{d : rows @ d <= 0}`` in the plane."""
    rays = []
    for a in rows:
        for d in (np.array([-a[1], a[0]]), np.array([a[1], -a[0]])):
            if np.linalg.norm(d) > 0 and np.all(rows @ d <= 1e-12):
                rays.append(d)
    return rays


def necessary_refute(p: UncertainMOP, xbar, direction_net: int = 720, eps: float = CONE_EPS,
                     strict_tol: float = STRICT_TOL, seed: int = 0):
    """Search a direction ``d`` and scenario ``u`` with ``sigma_{df_i(xbar) - u_i}(d) < 0`` for every ``i``.

    Directions range over the linearization cone of the eps-active
    constraints. Returns ``(d, u)`` or None.
    """
    xbar = _vec(xbar, p.n, "xbar")
    gens = active_generators(p, xbar, eps)
    rows = np.vstack(list(gens.values())) if gens else np.zeros((0, p.n))
    D = _sphere_net(p.n, direction_net, seed)
    if p.n == 2 and rows.shape[0]:
        extra = _cone_rays_2d(rows)
        if extra:
            D = np.vstack([np.array(extra), D])
    D = D / np.abs(D).max(axis=1, keepdims=True)
    if rows.shape[0]:
        D = D[np.all(D @ rows.T <= 1e-12, axis=1)]
    sets = component_sets(p)
    subs = [subdiff_scalar(f, xbar) for f in p.objectives]
    for d in D:
        gaps = [support_value(S, d) - support_value(P, d) for S, P in zip(sets, subs)]
        if all(g > strict_tol for g in gaps):
            targets = [support_value(P, d) for P in subs]
            u = np.stack([support_point(S, d, target=t) for S, t in zip(sets, targets)])
            if p.diagonal:
                u = np.repeat(support_point(sets[0], d, target=max(targets))[None, :], p.p, axis=0)
            return d.copy(), u
    return None


def recheck_descent_pair(p: UncertainMOP, xbar, d, u, strict_tol: float = STRICT_TOL) -> bool:
    """Direct check that ``<x* - u_i, d> < 0`` for every generator of every ``df_i(xbar)``."""
    d = np.asarray(d, dtype=float)
    for i, f in enumerate(p.objectives):
        V = subdiff_scalar(f, xbar).vertices - np.asarray(u[i])
        if np.max(V @ d) >= -strict_tol:
            return False
    return True


# ---------------------------------------------------------------- KKT


@dataclass(frozen=True)
class Multipliers:
    lam: np.ndarray
    mu: np.ndarray
    objective_weights: tuple  # per objective: convex weights over subgradient generators
    constraint_weights: dict  # active j -> convex weights over its generators
    normalization: str
    residual: float
    generators: dict = field(repr=False, default_factory=dict)


def kkt_solve(p: UncertainMOP, xbar, u, normalization: str = "joint",
              active: dict | None = None) -> Multipliers | None:
    """Solve ``sum lam_i u_i in sum lam_i df_i(xbar) + sum mu_j co{d_x g_j(xbar, v) : v active}`` as one LP.

    ``normalization="joint"`` imposes ``sum lam + sum mu = 1``; ``"lambda"``
    imposes ``sum lam = 1`` with ``mu`` free. Inactive constraints get
    ``mu_j = 0``. Returns None when the system is infeasible.
    """
    if normalization not in NORMALIZATIONS:
        raise ConfigError(f"normalization must be one of {NORMALIZATIONS}")
    xbar = _vec(xbar, p.n, "xbar")
    U = np.asarray(u, dtype=float).reshape(p.p, p.n)
    obj_gens = [subdiff_scalar(f, xbar).vertices for f in p.objectives]
    con_gens = active_generators(p, xbar) if active is None else active
    js = sorted(con_gens)
    n = p.n
    # variable layout: lam (p) | beta blocks | mu (|js|) | gamma blocks
    sizes_b = [G.shape[0] for G in obj_gens]
    sizes_g = [con_gens[j].shape[0] for j in js]
    nb, ng = sum(sizes_b), sum(sizes_g)
    nl, nm = p.p, len(js)
    nv = nl + nb + nm + ng
    o_b, o_m, o_g = nl, nl + nb, nl + nb + nm
    rows, rhs = [], []
    # vector equation: sum beta_ik g_ik - sum lam_i u_i + sum gamma_jl a_jl = 0
    M = np.zeros((n, nv))
    M[:, :nl] = -U.T
    off = o_b
    for G in obj_gens:
        M[:, off:off + G.shape[0]] = G.T
        off += G.shape[0]
    off = o_g
    for j in js:
        G = con_gens[j]
        M[:, off:off + G.shape[0]] = G.T
        off += G.shape[0]
    rows.append(M)
    rhs.append(np.zeros(n))
    # homogenised convex weights
    off = o_b
    for i, k in enumerate(sizes_b):
        r = np.zeros(nv)
        r[off:off + k] = 1.0
        r[i] = -1.0
        rows.append(r[None, :])
        rhs.append([0.0])
        off += k
    off = o_g
    for t, k in enumerate(sizes_g):
        r = np.zeros(nv)
        r[off:off + k] = 1.0
        r[o_m + t] = -1.0
        rows.append(r[None, :])
        rhs.append([0.0])
        off += k
    r = np.zeros(nv)
    r[:nl] = 1.0
    if normalization == "joint":
        r[o_m:o_m + nm] = 1.0
    rows.append(r[None, :])
    rhs.append([1.0])
    A_eq = np.vstack(rows)
    b_eq = np.concatenate([np.asarray(x, dtype=float) for x in rhs])
    res = linprog(np.zeros(nv), A_eq=A_eq, b_eq=b_eq)
    if not res.ok:
        return None
    z = np.maximum(res.x, 0.0)
    lam = z[:nl]
    mu_active = z[o_m:o_m + nm]
    mu = np.zeros(p.q)
    mu[js] = mu_active
    resid = float(np.abs(M @ z).max()) if n else 0.0

    def split(block, sizes, scale):
        out, off = [], 0
        for k, s in zip(sizes, scale):
            w = block[off:off + k]
            out.append(w / s if s > 1e-15 else np.full(k, 1.0 / k))
            off += k
        return out

    ow = tuple(split(z[o_b:o_m], sizes_b, lam))
    cw = dict(zip(js, split(z[o_g:], sizes_g, mu_active)))
    return Multipliers(lam, mu, ow, cw, normalization, resid,
                       {"objectives": obj_gens, "constraints": {j: con_gens[j] for j in js}})


def kkt_membership_residual(p: UncertainMOP, xbar, u, lam, mu, act_tol: float = ACT_TOL) -> float:
    """Residual of ``sum lam_i u_i`` against the assembled Minkowski sum, via the membership LP.

    Independent of how the multipliers were found: the right-hand side is
    rebuilt from the subdifferential calculus and tested with ``membership_residual``.
    """
    from ..geometry import membership_residual, minkowski_sum
    xbar = _vec(xbar, p.n, "xbar")
    U = np.asarray(u, dtype=float).reshape(p.p, p.n)
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    parts = [(float(l), subdiff_scalar(f, xbar, act_tol)) for l, f in zip(lam, p.objectives)]
    gens = active_generators(p, xbar, act_tol=act_tol)
    for j in range(p.q):
        if mu[j] > 0:
            if j not in gens:
                return np.inf  # complementarity broken
            parts.append((float(mu[j]), Polytope(gens[j])))
    return membership_residual(minkowski_sum(parts), lam @ U)


def cq2(p: UncertainMOP, xbar) -> bool:
    """True when the origin lies outside the hull of all active constraint subgradients."""
    gens = active_generators(p, xbar)
    if not gens:
        return True
    return not contains_point(Polytope(np.vstack(list(gens.values()))), np.zeros(p.n))


def highly_robust_kkt(p: UncertainMOP, xbar, scenarios: ScenarioSet, normalization: str = "lambda") -> Verdict:
    """KKT feasibility under every sampled scenario (``sum lam = 1`` by default)."""
    xbar = _vec(xbar, p.n, "xbar")
    gens = active_generators(p, xbar)
    res = {"scenarios": len(scenarios), "normalization": normalization}
    for u, label in scenarios:
        if kkt_solve(p, xbar, u, normalization, active=gens) is None:
            witness = {"u": u.copy(), "scenario_label": label}
            if cq2(p, xbar):
                return Verdict.refuted_by(witness, res, "KKT system infeasible while CQ2 holds")
            return Verdict.inconclusive(res, "KKT system infeasible but CQ2 fails", witness)
    return Verdict.consistent(res)


# ---------------------------------------------------------------- generalized convexity


@dataclass(frozen=True)
class ConvexityResult:
    holds: bool
    counterexample: dict | None = None
    checked: int = 0

    def __bool__(self) -> bool:
        return self.holds


def _constraint_rows(p, xbar, x, active_params):
    """Rows ``<y*, d> <= g_j(x, v) - g_j(xbar, v)`` over active parameters."""
    out = []
    for j, vs in active_params.items():
        g = p.constraints[j]
        vals = g.values(np.stack([x, xbar]), list(vs))
        for t, v in enumerate(vs):
            rhs = float(vals[0, t] - vals[1, t])
            for y in subdiff_constraint(p, j, xbar, v).vertices:
                out.append((y, rhs))
    return out


def generalized_convexity(p: UncertainMOP, xbar, x_samples, scenarios: ScenarioSet, strict: bool = False,
                          include_constraints: bool = True, strict_tol: float = STRICT_TOL) -> ConvexityResult:
    """Check, for every sample ``x`` and scenario ``u``, that some ``d`` satisfies the subgradient inequalities.

    Objective rows are ``<x*, d> <= f_i(x,u_i) - f_i(xbar,u_i)`` (strict when
    ``strict``) over the generators of ``d_x f_i(xbar, u_i)``; constraint rows
    are added over the active parameters when ``include_constraints``.
    ``d = x - xbar`` is tried first by substitution, then an LP search.
    """
    xbar = _vec(xbar, p.n, "xbar")
    X = np.atleast_2d(np.asarray(x_samples, dtype=float))
    X = X[np.linalg.norm(X - xbar, axis=1) > 1e-12]
    subs = [subdiff_scalar(f, xbar).vertices for f in p.objectives]
    active_params = {}
    if include_constraints:
        for j in range(p.q):
            if abs(constraint_sup(p, j, xbar).value) <= COMPLEMENTARITY_TOL:
                vs = active_set(p, j, xbar)
                if vs:
                    active_params[j] = vs
    fbar = np.array([eval_scalar(f, xbar) for f in p.objectives])
    checked = 0
    for x in X:
        fx = np.array([eval_scalar(f, x) for f in p.objectives])
        step = x - xbar
        crow = _constraint_rows(p, xbar, x, active_params)
        # d = x - xbar: the u_i terms cancel on both sides, so one test covers every scenario
        gaps = [fx[i] - fbar[i] - np.max(G @ step) for i, G in enumerate(subs)]
        obj_ok = all(g > strict_tol for g in gaps) if strict else all(g >= -1e-12 for g in gaps)
        con_ok = all(y @ step <= rhs + 1e-12 for y, rhs in crow)
        if obj_ok and con_ok:
            checked += len(scenarios)
            continue
        box = 1.0 + 2.0 * float(np.abs(step).max())
        for u, label in scenarios:
            checked += 1
            rows = []
            for i, G in enumerate(subs):
                rhs = fx[i] - fbar[i] - u[i] @ step
                rows += [(g - u[i], rhs) for g in G]
            if strict:
                sol = solve_strict_feasibility(rows, crow, strict_tol=strict_tol, box=box)
            else:
                sol = solve_strict_feasibility([], rows + crow, box=box) if rows + crow else None
            if sol is not None and not sol.feasible:
                return ConvexityResult(False, {"x": x.copy(), "u": u.copy(), "scenario_label": label}, checked)
    return ConvexityResult(True, None, checked)


def no_descent_pair(p: UncertainMOP, xbar, scenarios: ScenarioSet, strict_tol: float = STRICT_TOL):
    """For every scenario, confirm no ``d`` has ``<x* - u_i, d> < 0`` for all generators and all ``i``.

    Returns None when none exists, else ``(d, u)``.
    """
    xbar = _vec(xbar, p.n, "xbar")
    subs = [subdiff_scalar(f, xbar).vertices for f in p.objectives]
    for u, _ in scenarios:
        rows = [(g - u[i], 0.0) for i, G in enumerate(subs) for g in G]
        sol = solve_strict_feasibility(rows, strict_tol=strict_tol)
        if sol.feasible:
            return sol.witness, u.copy()
    return None


def sufficiency_certificate(p: UncertainMOP, xbar, scenarios: ScenarioSet, x_samples,
                            strict: bool = False) -> Verdict:
    """Certify local highly robust efficiency at sampled resolution.

    Weak variant: KKT feasible under every scenario and ``(f, g)`` generalized
    convex on the samples. Strict variant: no common descent direction under
    any scenario and ``f`` strictly generalized convex on the samples.
    """
    xbar = _vec(xbar, p.n, "xbar")
    X = np.atleast_2d(np.asarray(x_samples, dtype=float))
    res = {"scenarios": len(scenarios), "x_samples": int(X.shape[0]), "strict": strict}
    if strict:
        pair = no_descent_pair(p, xbar, scenarios)
        if pair is not None:
            return Verdict.inconclusive(res, "a common descent direction exists for some scenario",
                                        {"d": pair[0], "u": pair[1]})
        conv = generalized_convexity(p, xbar, X, scenarios, strict=True, include_constraints=False)
        path = "no-descent+strict-generalized-convexity"
    else:
        kkt = highly_robust_kkt(p, xbar, scenarios)
        if kkt.status.name != "CONSISTENT":
            return kkt
        conv = generalized_convexity(p, xbar, X, scenarios, strict=False, include_constraints=True)
        path = "kkt+generalized-convexity"
    if not conv:
        return Verdict.inconclusive(res, "generalized convexity fails at a sample", conv.counterexample)
    return Verdict.certified(CertificateKind.GENERALIZED_CONVEX_KKT, {"path": path, "pairs_checked": conv.checked},
                             res, "local certificate at sampled resolution")


def strictness_condition(p: UncertainMOP, xbar, x_samples, strict_tol: float = STRICT_TOL) -> bool:
    """Whether ``sigma_{U_i}(x - xbar) > 0`` for every ``i`` and every sample ``x != xbar``."""
    xbar = _vec(xbar, p.n, "xbar")
    sets = component_sets(p)
    for x in np.atleast_2d(np.asarray(x_samples, dtype=float)):
        d = x - xbar
        if np.linalg.norm(d) <= 1e-12:
            continue
        if not all(support_value(S, d) > strict_tol for S in sets):
            return False
    return True
