"""``hirob`` command line: check, reduce, worstcase, ingest, report.

Exit codes: 0 when no check is refuted, 1 when some check is refuted,
2 on any error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import HirobError, NotApplicable
from .ingest import ingest_returns
from .io import ProblemFile, canonical_dumps, parse_problem, problem_to_dict, write_problem
from .report import (SUITES, CheckConfig, checks_csv, emit_report, exit_code, load_report, run_check,
                     summarize)
from .scenarios import DEFAULT_GAMMA_GRID, diagonal_reduce


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _radius(text: str):
    return float("inf") if text.lower() in ("inf", "global") else float(text)


def _add_check_flags(sp):
    sp.add_argument("problem", help="problem file (JSON)")
    sp.add_argument("--candidate", default="xbar", help="name of the candidate point in the problem file")
    sp.add_argument("--grid", type=int, default=101, help="lattice points per axis")
    sp.add_argument("--scenario-res", type=int, default=5, help="scenario lattice resolution per set")
    sp.add_argument("--radius", type=_radius, default=None,
                    help="neighbourhood radius ('inf' for the whole box; default quarter box diameter)")
    sp.add_argument("--tol", type=float, default=1e-9, help="robust feasibility tolerance")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="write the report here instead of stdout")
    sp.add_argument("--timings", action="store_true", help="record wall time per check (breaks byte-identity)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hirob", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"hirob {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run a check suite on a candidate point")
    _add_check_flags(c)
    c.add_argument("--suite", default="highly-robust",
                   help=f"comma-separated suites from {sorted(SUITES)}")
    c.add_argument("--mode", default="efficient", choices=("weak", "efficient", "strict"))
    c.add_argument("--gamma-grid", type=_floats, default=DEFAULT_GAMMA_GRID,
                   help="ray scalings for vertex-ray scenarios, e.g. 0,0.5,1,2")
    c.add_argument("--epd", action="store_true", help="add vertex-ray scenarios (polytope sets only)")
    c.add_argument("--direction-net", type=int, default=720)

    w = sub.add_parser("worstcase", help="worst-case and set-based robust efficiency")
    _add_check_flags(w)

    r = sub.add_parser("reduce", help="restrict to diagonal scenarios when all uncertainty sets coincide")
    r.add_argument("problem")
    r.add_argument("--out", help="write the reduced problem file here")

    i = sub.add_parser("ingest", help="build a portfolio problem from a returns CSV")
    i.add_argument("csv")
    i.add_argument("--window", type=int, required=True)
    i.add_argument("--set-type", default="box", choices=("box", "ball", "ellipsoid"))
    i.add_argument("--budget", type=float, default=1.0)
    i.add_argument("--out", required=True, help="problem file to write")

    s = sub.add_parser("report", help="summarize a saved report")
    s.add_argument("report")
    s.add_argument("--csv", help="also dump the per-check table as CSV")
    return ap


def _check(args, suite: str) -> int:
    cfg = CheckConfig(
        problem_path=args.problem, candidate=args.candidate, suite=suite,
        mode=getattr(args, "mode", "efficient"), grid=args.grid, scenario_res=args.scenario_res,
        radius=args.radius, tol=args.tol, seed=args.seed,
        gamma_grid=getattr(args, "gamma_grid", DEFAULT_GAMMA_GRID), use_epd=getattr(args, "epd", False),
        direction_net=getattr(args, "direction_net", 720), timings=args.timings,
    )
    report = run_check(cfg)
    text = emit_report(report, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(summarize(report))
    return exit_code(report)


def _reduce(args) -> int:
    pf = parse_problem(args.problem)
    try:
        reduced = diagonal_reduce(pf.problem)
    except NotApplicable as exc:
        print(canonical_dumps({"applicable": False, "reason": str(exc)}))
        return 0
    out = ProblemFile(reduced, pf.candidates, pf.comments)
    if args.out:
        write_problem(out, args.out)
        print(canonical_dumps({"applicable": True, "written": args.out}))
    else:
        print(canonical_dumps({"applicable": True, "problem": problem_to_dict(out)}))
    return 0


def _ingest(args) -> int:
    pf = ingest_returns(args.csv, args.window, args.set_type, args.budget)
    write_problem(pf, args.out)
    print(f"wrote {args.out}: {pf.problem.n} assets, {args.set_type} return uncertainty")
    return 0


def _report(args) -> int:
    report = load_report(args.report)
    print(summarize(report))
    if args.csv:
        checks_csv(report, args.csv)
    return exit_code(report)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            return _check(args, args.suite)
        if args.command == "worstcase":
            return _check(args, "robust")
        if args.command == "reduce":
            return _reduce(args)
        if args.command == "ingest":
            return _ingest(args)
        return _report(args)
    except (HirobError, OSError, ValueError, KeyError) as exc:
        print(f"hirob: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
