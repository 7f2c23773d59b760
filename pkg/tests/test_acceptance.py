"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hirob.certify import (Status, build_lattice, cq2, highly_robust_scan, isolated_implies_hr,  # noqa: E402
                           kkt_membership_residual, kkt_solve, necessary_refute, recheck_descent_pair,
                           recheck_scan_witness, set_based_check, worst_case_check)
from hirob.geometry import Polytope, contains_point, minkowski_sum, support_value  # noqa: E402
from hirob.io import canonical_dumps, fixture_path, parse_problem  # noqa: E402
from hirob.model import AbsTerm, ScalarExpr, UncertainMOP, active_set  # noqa: E402
from hirob.report import CheckConfig, run_check  # noqa: E402
from hirob.scenarios import ScenarioSet, epd_scenarios, sample  # noqa: E402
from hirob.subdiff import subdiff_scalar  # noqa: E402

from oracles import (central_gradient, hull_oracle, isolated_instance, kink_clearance,  # noqa: E402
                     neckkt_multipliers, random_expr)

RESULTS: dict[int, tuple[bool, str]] = {}
REPORTS: dict[int, str] = {}


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _vertex_set(P, digits=12):
    return sorted(map(tuple, np.round(P.vertices, digits)))


# ---------------------------------------------------------------- criteria


def criterion_1():
    path = fixture_path("exhrob")
    cfg = CheckConfig(str(path), suite="highly-robust", mode="efficient", grid=201, scenario_res=11,
                      radius=np.inf)
    rep, dt = _timed(lambda: run_check(cfg))
    check = rep["checks"][0]
    ok = (check["status"] == "ConsistentAtResolution" and check["resolution"]["scenarios"] == 121
          and dt < 5.0)
    return ok, f"status={check['status']} scenarios={check['resolution']['scenarios']} t={dt:.2f}s (<5s)", rep


def criterion_2():
    pf = parse_problem(fixture_path("ex2-nec1"))
    p, xbar = pf.problem, pf.candidates["xbar"]

    def run():
        corners = ScenarioSet.from_points(p, [[[a], [b]] for a in (-1.0, 1.0) for b in (-1.0, 1.0)], "corner")
        S = corners.union(sample(p, 5), p.uncertainty)
        scan = highly_robust_scan(p, xbar, "weak", S, grid=201)
        pair = necessary_refute(p, xbar, 720)
        return scan, pair, len(S)

    (scan, pair, count), dt = _timed(run)
    ok = scan.status is Status.REFUTED and recheck_scan_witness(p, xbar, scan.witness) and pair is not None
    agree = False
    if ok:
        d, u = pair
        step = scan.witness["x"] - xbar
        agree = bool(d[0] < 0 and step[0] < 0 and recheck_descent_pair(p, xbar, d, u))
    ok = ok and agree and dt < 2.0
    rep = {"scan": scan.status.value, "scan_witness": scan.witness, "pair": None if pair is None else list(pair),
           "scenarios": count}
    return ok, f"scan={scan.status.value} pair_d={None if pair is None else pair[0].tolist()} agree={agree} " \
               f"t={dt:.2f}s (<2s)", rep


def criterion_3():
    pf = parse_problem(fixture_path("ex1-nec1"))
    p, xbar = pf.problem, pf.candidates["xbar"]

    def run():
        return [subdiff_scalar(f, xbar) for f in p.objectives], necessary_refute(p, xbar, 720)

    (subs, pair), dt = _timed(run)
    want = [np.array([[-1.0, 1.0], [1.0, 1.0]]), np.array([[1.0, -1.0], [1.0, 1.0]])]
    seg_ok = all(P.vertices.shape == W.shape and
                 np.max(np.abs(np.array(sorted(map(tuple, P.vertices))) - W)) <= 1e-12 for P, W in zip(subs, want))
    ok = seg_ok and pair is None and dt < 5.0
    rep = {"subdiffs": [_vertex_set(P) for P in subs], "pair": pair}
    return ok, f"segments_exact={seg_ok} refuting_pair={'none' if pair is None else 'found'} t={dt:.2f}s (<5s)", rep


def criterion_4():
    pf = parse_problem(fixture_path("ex-neckkt"))
    p, xbar = pf.problem, pf.candidates["xbar"]
    want = [[-np.pi / 2, np.pi], [1.0], [0.0]]

    def run():
        acts = [active_set(p, j, xbar) for j in range(3)]
        S = sample(p, 3)
        worst_solver, worst_closed, feasible = 0.0, 0.0, True
        for u, _ in S:
            m = kkt_solve(p, xbar, u)
            if m is None:
                feasible = False
                continue
            worst_solver = max(worst_solver, kkt_membership_residual(p, xbar, u, m.lam, m.mu))
            lam, mu = neckkt_multipliers(u)
            worst_closed = max(worst_closed, kkt_membership_residual(p, xbar, u, lam, mu))
        return acts, len(S), feasible, worst_solver, worst_closed, cq2(p, xbar)

    (acts, count, feasible, r_solver, r_closed, cq), dt = _timed(run)
    act_ok = all(len(a) == len(w) and np.max(np.abs(np.array(a) - w)) <= 1e-6 for a, w in zip(acts, want))
    ok = act_ok and count == 81 and feasible and r_solver <= 1e-8 and r_closed <= 1e-9 and cq and dt < 10.0
    rep = {"active": acts, "scenarios": count, "feasible": feasible, "cq2": cq,
           "solver_residual_ok": r_solver <= 1e-8, "closed_form_residual_ok": r_closed <= 1e-9}
    return ok, (f"active_ok={act_ok} kkt_feasible={feasible} scenarios={count} solver_res={r_solver:.1e} (<=1e-8) "
                f"closed_form_res={r_closed:.1e} (<=1e-9) cq2={cq} t={dt:.2f}s (<10s)"), rep


def criterion_5():
    rng = np.random.default_rng(5)
    disagreements, checked, skipped = 0, 0, 0
    labels = []
    while checked < 200:
        V = rng.normal(size=(int(rng.integers(1, 7)), 3))
        if rng.random() < 0.5:
            # grid-weighted combination of at most dim + 1 vertices: inside by construction
            sub = rng.choice(V.shape[0], size=min(V.shape[0], 4), replace=False)
            w = rng.multinomial(50, np.ones(sub.size) / sub.size) / 50.0
            y = w @ V[sub]
        else:
            y = rng.uniform(V.min(axis=0) - 0.5, V.max(axis=0) + 0.5)
        truth = hull_oracle(V, y)
        if truth is None:
            skipped += 1
            continue
        got = contains_point(Polytope(V), y, tol=1e-7)
        disagreements += int(got != truth)
        labels.append(bool(truth))
        checked += 1
    ok = disagreements == 0
    rep = {"pairs": checked, "inside": int(sum(labels)), "disagreements": disagreements, "ambiguous_redrawn": skipped}
    return ok, f"pairs={checked} inside={sum(labels)} disagreements={disagreements} (=0)", rep


def _split_terms(e):
    """Each term of an expression as its own expression (smooth part first)."""
    out = [ScalarExpr(e.constant, e.linear, e.quad, n=e.n)]
    out += [ScalarExpr(abs_terms=(t,), n=e.n) for t in e.abs_terms]
    out += [ScalarExpr(max_terms=(m,), n=e.n) for m in e.max_terms]
    return out


def criterion_6():
    rng = np.random.default_rng(6)
    worst_rel, smooth_pts = 0.0, 0
    while smooth_pts < 500:
        n = int(rng.integers(1, 5))
        e = random_expr(rng, n)
        x = rng.normal(size=n)
        if kink_clearance(e, x) < 1e-3:
            continue
        P = subdiff_scalar(e, x)
        ref = central_gradient(e, x)
        err = np.inf if P.vertices.shape[0] != 1 else np.linalg.norm(P.vertices[0] - ref)
        worst_rel = max(worst_rel, err / max(1.0, np.linalg.norm(ref)))
        smooth_pts += 1
    worst_add = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        x = rng.normal(size=n)
        e = random_expr(rng, n)
        # put every kink through x so the pieces are genuine segments and hulls
        e = ScalarExpr(e.constant, e.linear, e.quad,
                       tuple(AbsTerm(t.weight, t.a, float(t.a @ x)) for t in e.abs_terms), e.max_terms, n=n)
        d = rng.normal(size=n)
        whole = support_value(subdiff_scalar(e, x), d)
        parts = sum(support_value(subdiff_scalar(t, x), d) for t in _split_terms(e))
        direct = support_value(minkowski_sum([(1.0, subdiff_scalar(t, x)) for t in _split_terms(e)]), d)
        worst_add = max(worst_add, abs(whole - parts), abs(direct - parts))
    ok = worst_rel <= 1e-6 and worst_add <= 1e-9
    rep = {"smooth_points": smooth_pts, "fd_ok": worst_rel <= 1e-6, "additivity_ok": worst_add <= 1e-9}
    return ok, f"fd_rel_err={worst_rel:.1e} (<=1e-6) additivity_err={worst_add:.1e} (<=1e-9)", rep


def _polyhedral_instance(seed):
    """Random quadratic objectives; even seeds add weight-3 kinks at the candidate and keep the sets bounded."""
    rng = np.random.default_rng(seed)
    xbar = rng.uniform(-0.5, 0.5, size=2)
    kinked = seed % 2 == 0
    kinks = tuple(AbsTerm(3.0, np.eye(2)[k], xbar[k]) for k in range(2)) if kinked else ()
    objs = tuple(ScalarExpr(linear=rng.normal(size=2), quad=np.diag(0.5 + rng.random(2)), abs_terms=kinks)
                 for _ in range(2))
    sets = []
    for _ in range(2):
        V = rng.uniform(-1, 1, size=(3, 2))
        R = rng.normal(size=(1, 2)) if not kinked and rng.random() < 0.7 else None
        sets.append(Polytope(V, R))
    p = UncertainMOP(2, objs, tuple(sets), (), ([-1.0, -1.0], [1.0, 1.0]))
    return p, xbar


def criterion_7():
    disagreements, refuted = 0, 0
    rows = []
    for seed in range(20):
        p, xbar = _polyhedral_instance(seed)
        lat = build_lattice(p, xbar, grid=41)
        full = highly_robust_scan(p, xbar, "efficient", sample(p, 5), lattice=lat).status
        epd = highly_robust_scan(p, xbar, "efficient", epd_scenarios(p), lattice=lat).status
        disagreements += int((full is Status.REFUTED) != (epd is Status.REFUTED))
        refuted += int(full is Status.REFUTED)
        rows.append([full.value, epd.value])
    ok = disagreements == 0
    return ok, f"instances=20 refuted={refuted} disagreements={disagreements} (=0)", {"statuses": rows}


def criterion_8():
    violations, consistent = 0, []
    rows = {}
    for name in ("exhrob", "ex1-nec1", "ex2-nec1", "ex-neckkt", "disk"):
        pf = parse_problem(fixture_path(name))
        p, xbar = pf.problem, pf.candidates["xbar"]
        lat = build_lattice(p, xbar, grid=101)
        S = sample(p, 5)
        scan = highly_robust_scan(p, xbar, "efficient", S, lattice=lat).status
        wc = worst_case_check(p, xbar, lattice=lat).status
        sb = set_based_check(p, xbar, S, lattice=lat).status
        rows[name] = [scan.value, wc.value, sb.value]
        if scan is Status.CONSISTENT:
            consistent.append(name)
            violations += int(wc is Status.REFUTED) + int(sb is Status.REFUTED)
    ok = violations == 0 and len(consistent) > 0
    return ok, f"consistent_fixtures={consistent} violations={violations} (=0)", rows


def criterion_9():
    violations = 0
    rows = []
    for seed in range(10):
        p, c = isolated_instance(seed)
        lat = build_lattice(p, c, grid=41)
        iso = isolated_implies_hr(p, c, lattice=lat).status
        scan = highly_robust_scan(p, c, "strict", sample(p, 4), lattice=lat).status
        violations += int(iso is not Status.CERTIFIED) + int(scan is not Status.CONSISTENT)
        rows.append([iso.value, scan.value])
    return violations == 0, f"instances=10 violations={violations} (=0)", {"statuses": rows}


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 10)}


def _run(k):
    ok, detail, rep = CRITERIA[k]()
    return ok, detail, canonical_dumps(rep)


def _record(k, ok, detail):
    line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = (ok, line)
    print(line)


# ---------------------------------------------------------------- pytest entry points


@pytest.mark.parametrize("k", range(1, 10))
def test_criterion(k):
    ok, detail, rep = _run(k)
    REPORTS[k] = rep
    _record(k, ok, detail)
    assert ok, detail


def test_criterion_10_determinism():
    mismatched = []
    for k in range(1, 10):
        first = REPORTS.get(k) or _run(k)[2]
        second = _run(k)[2]
        if first != second:
            mismatched.append(k)
    ok = not mismatched
    _record(10, ok, f"rerun criteria 1-9, byte-identical reports; mismatches={mismatched}")
    assert ok


if __name__ == "__main__":
    fails = 0
    for k in range(1, 10):
        ok, detail, rep = _run(k)
        REPORTS[k] = rep
        _record(k, ok, detail)
        fails += not ok
    mism = [k for k in range(1, 10) if _run(k)[2] != REPORTS[k]]
    _record(10, not mism, f"rerun criteria 1-9, byte-identical reports; mismatches={mism}")
    sys.exit(1 if fails or mism else 0)
