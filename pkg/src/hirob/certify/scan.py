"""Lattice oracles: efficiency scans over sampled scenarios and the robustness notions built on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NotApplicable
from ..geometry import support_value
from ..model import UncertainMOP, _vec, eval_scalar, feasible_mask, is_robust_feasible
from ..scenarios import ScenarioSet, component_sets, norm_sup
from .verdict import CertificateKind, Verdict

STRICT_TOL = 1e-9
EQ_TOL = 1e-12
DEFAULT_GRID = 101
MAX_LATTICE_DIM = 3
MODES = ("weak", "efficient", "strict")


def default_radius(p: UncertainMOP) -> float:
    lo, hi = _bounds(p)
    return 0.25 * float(np.linalg.norm(hi - lo))


def _bounds(p: UncertainMOP):
    if p.box_bounds is None:
        raise ConfigError("lattice oracles need box_bounds on the problem")
    return p.box_bounds


@dataclass(frozen=True, eq=False)
class Lattice:
    """Robust-feasible lattice points around ``xbar`` with cached nominal values."""

    xbar: np.ndarray
    X: np.ndarray
    F: np.ndarray  # nominal objective values at X, shape (N, p)
    fbar: np.ndarray
    radius: float
    grid: int

    @property
    def size(self) -> int:
        return self.X.shape[0]

    def resolution(self) -> dict:
        return {"grid": self.grid, "radius": self.radius, "lattice_points": self.size}


def build_lattice(p: UncertainMOP, xbar, radius: float | None = None, grid: int = DEFAULT_GRID,
                  tol: float = STRICT_TOL) -> Lattice:
    """``grid`` points per axis over ``box_bounds``, cut to ``ball(xbar, radius)`` and to the feasible set.

    ``xbar`` itself is left out. ``radius=None`` uses a quarter of the box
    diameter; ``np.inf`` scans the whole box.
    """
    if p.n > MAX_LATTICE_DIM:
        raise ConfigError(f"lattice oracles support n <= {MAX_LATTICE_DIM}; supply sample lists instead")
    if grid < 2:
        raise ConfigError("grid must have at least 2 points per axis")
    lo, hi = _bounds(p)
    if np.any(hi <= lo):
        raise ConfigError("box_bounds are degenerate, the lattice would be empty")
    xbar = _vec(xbar, p.n, "xbar")
    radius = default_radius(p) if radius is None else float(radius)
    if not radius > 0:
        raise ConfigError("radius must be positive")
    axes = [np.linspace(a, b, grid) for a, b in zip(lo, hi)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, p.n)
    dist = np.linalg.norm(X - xbar, axis=1)
    X = X[(dist <= radius) & (dist > EQ_TOL)]
    if X.shape[0]:
        X = X[feasible_mask(p, X, tol)]
    F = p.nominal_values(X) if X.shape[0] else np.zeros((0, p.p))
    fbar = p.nominal_values(xbar)[0]
    return Lattice(xbar, X, F, fbar, radius, int(grid))


def _violations(D: np.ndarray, mode: str) -> np.ndarray:
    """Mask of rows of value differences ``D = f(x,u) - f(xbar,u)`` that break ``mode``."""
    if mode == "weak":
        return np.all(D < -STRICT_TOL, axis=-1)
    if mode == "efficient":
        return np.all(D <= EQ_TOL, axis=-1) & np.any(D < -STRICT_TOL, axis=-1)
    if mode == "strict":
        return np.all(D <= EQ_TOL, axis=-1)
    raise ConfigError(f"unknown efficiency mode {mode!r}; expected one of {MODES}")


def _differences(lat: Lattice, U: np.ndarray) -> np.ndarray:
    """``f(x,u) - f(xbar,u)`` for every lattice point and scenario: shape (S, N, p)."""
    base = lat.F - lat.fbar
    step = lat.X - lat.xbar
    return base[None, :, :] - np.einsum("kn,spn->skp", step, U)


def grid_efficiency(p: UncertainMOP, xbar, u, mode: str = "weak", radius: float | None = None,
                    grid: int = DEFAULT_GRID, lattice: Lattice | None = None) -> np.ndarray | None:
    """First lattice point beating ``xbar`` under scenario ``u`` in the sense of ``mode``, else None."""
    lat = lattice if lattice is not None else build_lattice(p, xbar, radius, grid)
    if mode not in MODES:
        raise ConfigError(f"unknown efficiency mode {mode!r}; expected one of {MODES}")
    if lat.size == 0:
        return None
    U = np.asarray(u, dtype=float).reshape(1, p.p, p.n)
    hits = np.flatnonzero(_violations(_differences(lat, U)[0], mode))
    return lat.X[hits[0]].copy() if hits.size else None


def highly_robust_scan(p: UncertainMOP, xbar, mode: str, scenarios: ScenarioSet,
                       radius: float | None = None, grid: int = DEFAULT_GRID,
                       lattice: Lattice | None = None, chunk_elems: int = 4_000_000) -> Verdict:
    """Efficiency of ``xbar`` under every sampled scenario, checked on the lattice."""
    if len(scenarios) == 0:
        raise ConfigError("scenario set is empty")
    if mode not in MODES:
        raise ConfigError(f"unknown efficiency mode {mode!r}; expected one of {MODES}")
    lat = lattice if lattice is not None else build_lattice(p, xbar, radius, grid)
    res = {**lat.resolution(), "mode": mode, "scenarios": len(scenarios)}
    if lat.size:
        step = max(1, chunk_elems // max(1, lat.size * p.p))
        for s0 in range(0, len(scenarios), step):
            U = scenarios.us[s0:s0 + step]
            bad = _violations(_differences(lat, U), mode)
            rows = np.flatnonzero(bad.any(axis=1))
            if rows.size:
                s = int(rows[0])
                k = int(np.flatnonzero(bad[s])[0])
                witness = {"x": lat.X[k].copy(), "u": U[s].copy(), "scenario_label": scenarios.labels[s0 + s],
                           "mode": mode}
                return Verdict.refuted_by(witness, res)
    return Verdict.consistent(res)


def recheck_scan_witness(p: UncertainMOP, xbar, witness: dict, tol: float = STRICT_TOL) -> bool:
    """Re-evaluate a scan witness from scratch: feasibility plus the claimed dominance."""
    x, u = np.asarray(witness["x"]), np.asarray(witness["u"])
    if not is_robust_feasible(p, x, tol):
        return False
    fx = np.array([eval_scalar(f, x) - u[i] @ x for i, f in enumerate(p.objectives)])
    fb = np.array([eval_scalar(f, xbar) - u[i] @ np.asarray(xbar) for i, f in enumerate(p.objectives)])
    return bool(_violations((fx - fb)[None, :], witness["mode"])[0])


def worst_case_check(p: UncertainMOP, xbar, radius: float | None = None, grid: int = DEFAULT_GRID,
                     lattice: Lattice | None = None) -> Verdict:
    """Efficiency of ``xbar`` for the worst-case objectives ``f_i(x) + sigma_{U_i}(-x)``."""
    lat = lattice if lattice is not None else build_lattice(p, xbar, radius, grid)
    sets = component_sets(p)
    res = {**lat.resolution(), "mode": "efficient"}
    xbar = lat.xbar

    def worst(X, F):
        return F + np.array([[support_value(S, -x) for S in sets] for x in X])

    Fbar = worst(xbar[None, :], lat.fbar[None, :])[0]
    if not np.all(np.isfinite(Fbar)):
        return Verdict.inconclusive(res, "worst-case objective is +inf at the candidate (unbounded uncertainty)")
    if lat.size == 0:
        return Verdict.consistent(res)
    FX = worst(lat.X, lat.F)
    with np.errstate(invalid="ignore"):
        D = FX - Fbar
    D = np.where(np.isfinite(D), D, np.inf)
    bad = np.flatnonzero(_violations(D, "efficient"))
    if bad.size:
        k = int(bad[0])
        return Verdict.refuted_by({"x": lat.X[k].copy(), "worst_case_values": FX[k], "candidate_values": Fbar}, res)
    return Verdict.consistent(res)


def _upper_frontier(B: np.ndarray) -> np.ndarray:
    """Rows of ``B`` not dominated from above by another row.

    Replacing ``B`` by this frontier leaves the set-based test unchanged: any
    row that dominates a candidate outcome is itself below a frontier row.
    """
    B = np.unique(B, axis=0)
    above = np.all(B[None, :, :] >= B[:, None, :] - EQ_TOL, axis=-1) & np.any(B[None, :, :] > B[:, None, :] + EQ_TOL,
                                                                             axis=-1)
    return B[~above.any(axis=1)]


def set_based_check(p: UncertainMOP, xbar, scenarios: ScenarioSet, radius: float | None = None,
                    grid: int = DEFAULT_GRID, lattice: Lattice | None = None, chunk_elems: int = 4_000_000) -> Verdict:
    """Search for ``x`` whose sampled outcome set sits inside ``f_U(xbar) - (R^p_+ minus 0)``."""
    lat = lattice if lattice is not None else build_lattice(p, xbar, radius, grid)
    res = {**lat.resolution(), "scenarios": len(scenarios)}
    U = scenarios.us
    B = _upper_frontier(lat.fbar[None, :] - np.einsum("n,spn->sp", lat.xbar, U))  # f(xbar, u') frontier
    per_point = len(scenarios) * B.shape[0] * p.p
    step = max(1, chunk_elems // max(1, per_point))
    for k0 in range(0, lat.size, step):
        X, F = lat.X[k0:k0 + step], lat.F[k0:k0 + step]
        A = F[:, None, :] - np.einsum("kn,spn->ksp", X, U)  # f(x, u): (K, S, p)
        D = A[:, :, None, :] - B[None, None, :, :]
        dominated = np.all(D <= EQ_TOL, axis=-1) & np.any(D < -STRICT_TOL, axis=-1)
        hit = np.flatnonzero(dominated.any(axis=2).all(axis=1))
        if hit.size:
            return Verdict.refuted_by({"x": X[hit[0]].copy()}, res)
    return Verdict.consistent(res)


def isolated_check(p: UncertainMOP, xbar, L: float, radius: float | None = None, grid: int = DEFAULT_GRID,
                   lattice: Lattice | None = None) -> tuple[bool, float]:
    """Whether ``max_i (f_i(x) - f_i(xbar)) >= L ||x - xbar||`` on the lattice, and the smallest ratio seen."""
    if not L > 0:
        raise ValueError("L must be positive")
    lat = lattice if lattice is not None else build_lattice(p, xbar, radius, grid)
    if lat.size == 0:
        return True, np.inf
    ratios = (lat.F - lat.fbar).max(axis=1) / np.linalg.norm(lat.X - lat.xbar, axis=1)
    margin = float(ratios.min())
    return margin >= L - EQ_TOL, margin


def isolated_implies_hr(p: UncertainMOP, xbar, radius: float | None = None, grid: int = DEFAULT_GRID,
                        tol: float = 1e-6, lattice: Lattice | None = None) -> Verdict:
    """Certify highly robust strict efficiency from isolation with a constant above every ``||u_i||``."""
    sups = [norm_sup(S) for S in component_sets(p)]
    if not np.all(np.isfinite(sups)):
        raise NotApplicable("an uncertainty set is unbounded, so no isolation constant can dominate it")
    L = max(sups) + tol
    lat = lattice if lattice is not None else build_lattice(p, xbar, radius, grid)
    holds, margin = isolated_check(p, xbar, L, lattice=lat)
    res = {**lat.resolution(), "L": L}
    evidence = {"L": L, "margin": margin}
    if holds:
        return Verdict.certified(CertificateKind.ISOLATED_EFFICIENCY, evidence, res,
                                 "isolation verified on the lattice only")
    return Verdict.inconclusive(res, "isolation constant not reached on the lattice", evidence)
