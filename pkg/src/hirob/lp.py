"""Dense two-phase simplex for the small linear programs used by the certifiers.

The solver works on a full tableau and uses Bland's rule for both the entering
and the leaving variable, which rules out cycling on degenerate vertices.
Problem sizes in this toolkit stay at a few hundred rows at most.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray | None
    fun: float
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _pivot(T, row, col):
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])


def _run_simplex(T, basis, cost, allowed, max_iter):
    """Minimise ``cost @ y`` over the tableau ``T`` (last column is the rhs).

    ``allowed`` masks the columns that may enter the basis. Returns
    ``(status, iterations)``.
    """
    m = T.shape[0]
    it = 0
    while True:
        cb = cost[basis]
        reduced = cost - cb @ T[:, :-1]
        cand = np.flatnonzero((reduced < -PIVOT_TOL * 10) & allowed)
        if cand.size == 0:
            return "optimal", it
        col = int(cand[0])
        column = T[:, col]
        pos = column > PIVOT_TOL
        if not pos.any():
            return "unbounded", it
        ratios = np.full(m, np.inf)
        ratios[pos] = T[pos, -1] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))
        row = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        if it > max_iter:
            raise SolverError(f"simplex exceeded {max_iter} iterations")


def _standard_form(n, A_ub, b_ub, A_eq, b_eq, bounds):
    """Map general variables onto nonnegative ones: ``x = shift + M @ y``."""
    if bounds is None:
        bounds = [(0.0, None)] * n
    elif isinstance(bounds, tuple) and len(bounds) == 2 and not isinstance(bounds[0], (tuple, list)):
        bounds = [bounds] * n
    cols = []
    shift = np.zeros(n)
    extra_rows = []  # (column index in y, upper bound) for doubly bounded vars
    for j, (lo, hi) in enumerate(bounds):
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if lo > hi:
            return None
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    M = np.zeros((n, len(cols)))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s
    ub_rows = []
    ub_rhs = []
    if A_ub is not None and len(A_ub):
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        ub_rows.append(A_ub @ M)
        ub_rhs.append(np.asarray(b_ub, dtype=float) - A_ub @ shift)
    for k, cap in extra_rows:
        row = np.zeros(len(cols))
        row[k] = 1.0
        ub_rows.append(row[None, :])
        ub_rhs.append(np.array([cap]))
    eq_rows = np.zeros((0, len(cols)))
    eq_rhs = np.zeros(0)
    if A_eq is not None and len(A_eq):
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        eq_rows = A_eq @ M
        eq_rhs = np.asarray(b_eq, dtype=float) - A_eq @ shift
    Aub = np.vstack(ub_rows) if ub_rows else np.zeros((0, len(cols)))
    bub = np.concatenate(ub_rhs) if ub_rhs else np.zeros(0)
    return M, shift, Aub, bub, eq_rows, eq_rhs


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None, *, max_iter=20_000) -> LPResult:
    """Minimise ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` and bounds.

    ``bounds`` follows the usual convention: a list of ``(lo, hi)`` pairs with
    ``None`` for an infinite side; the default is ``x >= 0``.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    sf = _standard_form(n, A_ub, b_ub, A_eq, b_eq, bounds)
    if sf is None:
        return LPResult("infeasible", None, np.inf)
    M, shift, Aub, bub, Aeq, beq = sf
    if not (np.all(np.isfinite(Aub)) and np.all(np.isfinite(bub)) and np.all(np.isfinite(Aeq)) and np.all(np.isfinite(beq))):
        raise SolverError("non-finite LP data")
    ny = M.shape[1]
    m_ub, m_eq = Aub.shape[0], Aeq.shape[0]
    m = m_ub + m_eq
    cy = c @ M
    if m == 0:
        if np.any(cy < -PIVOT_TOL):
            return LPResult("unbounded", None, -np.inf)
        return LPResult("optimal", shift.copy(), float(c @ shift))

    # columns: y (ny) | slacks (m_ub) | artificials (m)
    n_slack = m_ub
    total = ny + n_slack + m
    T = np.zeros((m, total + 1))
    T[:m_ub, :ny] = Aub
    T[:m_ub, ny:ny + n_slack] = np.eye(m_ub)
    T[:m_ub, -1] = bub
    T[m_ub:, :ny] = Aeq
    T[m_ub:, -1] = beq
    neg = T[:, -1] < 0
    T[neg] *= -1.0
    basis = []
    art_used = np.zeros(m, dtype=bool)
    for i in range(m):
        if i < m_ub and not neg[i]:
            basis.append(ny + i)
        else:
            T[i, ny + n_slack + i] = 1.0
            basis.append(ny + n_slack + i)
            art_used[i] = True
    basis = np.array(basis)

    iters = 0
    art_cols = np.arange(ny + n_slack, total)
    if art_used.any():
        cost1 = np.zeros(total)
        cost1[art_cols[art_used]] = 1.0
        allowed = np.ones(total, dtype=bool)
        allowed[art_cols[~art_used]] = False
        status, it = _run_simplex(T, basis, cost1, allowed, max_iter)
        iters += it
        infeas = float(cost1[basis] @ T[:, -1])
        scale = max(1.0, float(np.abs(T[:, -1]).max()))
        if infeas > FEAS_TOL * scale:
            return LPResult("infeasible", None, np.inf, iters)
        # drive remaining artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= ny + n_slack:
                row = T[i, :ny + n_slack]
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                if nz.size:
                    _pivot(T, i, int(nz[0]))
                    basis[i] = int(nz[0])
                else:
                    keep[i] = False
        T = T[keep]
        basis = basis[keep]
    T = np.hstack([T[:, :ny + n_slack], T[:, -1:]])
    cost2 = np.zeros(ny + n_slack)
    cost2[:ny] = cy
    allowed = np.ones(ny + n_slack, dtype=bool)
    status, it = _run_simplex(T, basis, cost2, allowed, max_iter)
    iters += it
    if status == "unbounded":
        return LPResult("unbounded", None, -np.inf, iters)
    y = np.zeros(ny + n_slack)
    y[basis] = T[:, -1]
    x = shift + M @ y[:ny]
    return LPResult("optimal", x, float(c @ x), iters)
