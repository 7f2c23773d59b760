"""Mean-variance portfolio problems built from a CSV of historical returns.

Returns enter the first objective ``-r.x`` linearly, so uncertainty in the
mean return vector is objective-wise linear uncertainty. The covariance is
estimated once and held fixed in the risk objective ``x^T C x``.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import IngestError
from .geometry import Ball, Box, Ellipsoid, FiniteSet
from .io import ProblemFile
from .model import FiniteScenarios, ScalarExpr, UncertainMOP

SET_TYPES = ("box", "ball", "ellipsoid")


def read_returns(path) -> tuple[list, np.ndarray]:
    """Header row of asset names followed by numeric rows."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise IngestError("CSV is empty")
    names = [c.strip() for c in rows[0]]
    data = []
    for k, r in enumerate(rows[1:], start=2):
        if len(r) != len(names):
            raise IngestError(f"row {k} has {len(r)} cells, header has {len(names)}")
        try:
            data.append([float(c) for c in r])
        except ValueError:
            raise IngestError(f"row {k} contains a non-numeric cell") from None
    R = np.array(data, dtype=float).reshape(len(data), len(names))
    if not np.all(np.isfinite(R)):
        raise IngestError("returns must be finite")
    return names, R


def ingest_returns(csv_path, window: int, set_type: str = "box", budget: float = 1.0) -> ProblemFile:
    """Build the return/risk problem from the trailing ``window`` rows.

    The return uncertainty set is centred at zero (a shift of the estimated
    mean) and sized by the per-asset standard error ``se``: ``+-2 se`` for a
    box, radius ``2 ||se||`` for a ball, ``diag((2 se)^2)`` for an ellipsoid.
    A zero-width set degenerates to the single point 0. The risk objective has
    no uncertainty.
    """
    if set_type not in SET_TYPES:
        raise IngestError(f"set_type must be one of {SET_TYPES}")
    if not budget > 0:
        raise IngestError("budget must be positive")
    names, R = read_returns(csv_path)
    if window < 2:
        raise IngestError("window must be at least 2")
    if R.shape[0] < window:
        raise IngestError(f"history has {R.shape[0]} rows, window needs {window}")
    W = R[-window:]
    n = W.shape[1]
    mean = W.mean(axis=0)
    cov = np.cov(W, rowvar=False, ddof=1).reshape(n, n)
    se = W.std(axis=0, ddof=1) / np.sqrt(window)
    # constant columns leave rounding noise in the spread; treat it as zero
    se = np.where(se <= 1e-12 * (1.0 + np.abs(mean)), 0.0, se)
    objectives = (
        ScalarExpr(linear=-mean),
        ScalarExpr(linear=np.zeros(n), quad=2.0 * cov),
    )
    if np.all(se == 0):
        u1 = FiniteSet(np.zeros((1, n)))
    elif set_type == "box":
        u1 = Box(-2 * se, 2 * se)
    elif set_type == "ball":
        u1 = Ball(np.zeros(n), 2 * float(np.linalg.norm(se)))
    else:
        if np.any(se == 0):
            raise IngestError("an asset has zero variance; the ellipsoid would be degenerate")
        u1 = Ellipsoid(np.zeros(n), np.diag((2 * se) ** 2))
    u2 = FiniteSet(np.zeros((1, n)))
    # label l < n: -x_l <= 0; label n: sum x - budget <= 0
    scen = [(float(l), ScalarExpr(linear=-np.eye(n)[l])) for l in range(n)]
    scen.append((float(n), ScalarExpr(constant=-budget, linear=np.ones(n))))
    problem = UncertainMOP(n, objectives, (u1, u2), (FiniteScenarios(tuple(scen)),),
                           (np.zeros(n), np.full(n, float(budget))))
    comments = {
        "source": Path(csv_path).name,
        "assets": names,
        "window": int(window),
        "set_type": set_type,
        "budget": float(budget),
        "note": "covariance estimated over the window and held fixed; only the return vector is uncertain",
    }
    return ProblemFile(problem, {"equal_weight": np.full(n, budget / n)}, comments)
