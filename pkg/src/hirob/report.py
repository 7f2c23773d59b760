"""Check orchestration and canonical reports."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .certify import (Verdict, build_lattice, fold, highly_robust_kkt, highly_robust_scan, isolated_implies_hr,
                      necessary_refute, proper_refuter, set_based_check, sufficiency_certificate, worst_case_check)
from .certify.verdict import Status
from .errors import ConfigError, HirobError
from .io import ProblemFile, canonical_dumps, parse_problem, problem_hash
from .scenarios import DEFAULT_GAMMA_GRID, component_sets, epd_scenarios, sample

SUITES = {
    "highly-robust": ("highly-robust",),
    "necessary": ("necessary",),
    "kkt": ("kkt",),
    "sufficiency": ("sufficiency",),
    "isolated": ("isolated",),
    "robust": ("worst-case", "set-based"),
    "proper": ("proper",),
}
SUITES["full"] = tuple(c for s in ("highly-robust", "necessary", "kkt", "sufficiency", "isolated", "robust", "proper")
                       for c in SUITES[s])


@dataclass
class CheckConfig:
    problem_path: str
    candidate: str = "xbar"
    suite: str = "highly-robust"
    mode: str = "efficient"
    grid: int = 101
    scenario_res: int = 5
    radius: float | None = None
    tol: float = 1e-9
    seed: int = 0
    gamma_grid: tuple = DEFAULT_GAMMA_GRID
    use_epd: bool = False
    direction_net: int = 720
    timings: bool = False


def _checks_for(suite: str) -> tuple:
    names = []
    for s in suite.split(","):
        s = s.strip()
        if s not in SUITES:
            raise ConfigError(f"unknown suite {s!r}; expected one of {sorted(SUITES)}")
        names += [c for c in SUITES[s] if c not in names]
    return tuple(names)


def _scenarios(pf: ProblemFile, cfg: CheckConfig):
    S = sample(pf.problem, cfg.scenario_res, cfg.seed)
    if cfg.use_epd:
        S = S.union(epd_scenarios(pf.problem, cfg.gamma_grid), component_sets(pf.problem))
    return S


def _run_one(name: str, pf: ProblemFile, xbar, cfg: CheckConfig, cache: dict) -> Verdict:
    p = pf.problem

    def lattice():
        if "lattice" not in cache:
            cache["lattice"] = build_lattice(p, xbar, cfg.radius, cfg.grid, cfg.tol)
        return cache["lattice"]

    def scenarios():
        if "scenarios" not in cache:
            cache["scenarios"] = _scenarios(pf, cfg)
        return cache["scenarios"]

    if name == "highly-robust":
        return highly_robust_scan(p, xbar, cfg.mode, scenarios(), lattice=lattice())
    if name == "necessary":
        pair = necessary_refute(p, xbar, cfg.direction_net, seed=cfg.seed)
        res = {"direction_net": cfg.direction_net, "cone": "linearization of eps-active constraints"}
        if pair is None:
            return Verdict.consistent(res)
        return Verdict.refuted_by({"d": pair[0], "u": pair[1]}, res,
                                  "descent pair refutes local highly robust weak efficiency")
    if name == "kkt":
        return highly_robust_kkt(p, xbar, scenarios())
    if name == "sufficiency":
        return sufficiency_certificate(p, xbar, scenarios(), lattice().X)
    if name == "isolated":
        return isolated_implies_hr(p, xbar, lattice=lattice())
    if name == "worst-case":
        return worst_case_check(p, xbar, lattice=lattice())
    if name == "set-based":
        return set_based_check(p, xbar, scenarios(), lattice=lattice())
    if name == "proper":
        return proper_refuter(p, xbar, cfg.direction_net, radius=cfg.radius, grid=cfg.grid, seed=cfg.seed)
    raise ConfigError(f"unknown check {name!r}")


def verdict_record(name: str, v: Verdict) -> dict:
    return {
        "name": name,
        "status": v.status.value,
        "certificate_kind": None if v.certificate_kind is None else v.certificate_kind.value,
        "witness": v.witness,
        "resolution": v.resolution,
        "note": v.note,
    }


def run_check(cfg: CheckConfig) -> dict:
    """Run the configured checks and assemble a report dictionary.

    A check that raises is recorded as Inconclusive with the error message;
    its siblings still run.
    """
    names = _checks_for(cfg.suite)
    pf = parse_problem(cfg.problem_path)
    if cfg.candidate not in pf.candidates:
        raise ConfigError(f"candidate {cfg.candidate!r} not in problem file (have {sorted(pf.candidates)})")
    xbar = pf.candidates[cfg.candidate]
    cache: dict = {}
    checks, verdicts = [], []
    for name in names:
        t0 = time.perf_counter()
        try:
            v = _run_one(name, pf, xbar, cfg, cache)
        except HirobError as exc:
            v = Verdict.inconclusive({}, f"{type(exc).__name__}: {exc}")
        rec = verdict_record(name, v)
        if cfg.timings:
            rec["wall_time_s"] = time.perf_counter() - t0
        checks.append(rec)
        verdicts.append(v)
    overall = fold(verdicts).status.value
    return {
        "toolkit_version": __version__,
        "problem_hash": problem_hash(cfg.problem_path),
        "candidate": {"name": cfg.candidate, "point": xbar},
        "seed": cfg.seed,
        "settings": {"suite": cfg.suite, "mode": cfg.mode, "grid": cfg.grid, "scenario_res": cfg.scenario_res,
                     "radius": cfg.radius, "tol": cfg.tol, "gamma_grid": list(cfg.gamma_grid),
                     "use_epd": cfg.use_epd, "direction_net": cfg.direction_net},
        "checks": checks,
        "overall": overall,
    }


def exit_code(report: dict) -> int:
    """0 when nothing is refuted, 1 otherwise."""
    return 1 if any(c["status"] == Status.REFUTED.value for c in report["checks"]) else 0


def emit_report(report: dict, path=None) -> str:
    """Canonical serialization; written to ``path`` when given, returned either way."""
    text = canonical_dumps(report) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())


def summarize(report: dict) -> str:
    lines = [f"candidate {report['candidate']['name']} = {report['candidate']['point']}",
             f"problem {report['problem_hash'][:12]}  seed {report['seed']}  overall {report['overall']}"]
    for c in report["checks"]:
        extra = f" [{c['certificate_kind']}]" if c.get("certificate_kind") else ""
        note = f"  ({c['note']})" if c.get("note") else ""
        lines.append(f"  {c['name']:<14} {c['status']}{extra}{note}")
    return "\n".join(lines)


def checks_csv(report: dict, path) -> None:
    """One row per check: name, status, certificate kind, witness (canonical JSON), note."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "status", "certificate_kind", "witness", "note"])
        for c in report["checks"]:
            w.writerow([c["name"], c["status"], c.get("certificate_kind") or "",
                        canonical_dumps(c.get("witness")), c.get("note", "")])
