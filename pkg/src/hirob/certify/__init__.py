"""Checks that refute or certify highly robust efficiency of a candidate point."""

from .conditions import (ConvexityResult, Multipliers, active_generators, cq2, generalized_convexity,
                         highly_robust_kkt, kkt_membership_residual, kkt_solve, necessary_refute,
                         no_descent_pair, recheck_descent_pair, strictness_condition, sufficiency_certificate)
from .properness import proper_refuter, tradeoff_ratios
from .scan import (Lattice, build_lattice, default_radius, grid_efficiency, highly_robust_scan, isolated_check,
                   isolated_implies_hr, recheck_scan_witness, set_based_check, worst_case_check)
from .verdict import CertificateKind, Status, Verdict, combine, fold

__all__ = [
    "CertificateKind", "ConvexityResult", "Lattice", "Multipliers", "Status", "Verdict", "active_generators",
    "build_lattice", "combine", "cq2", "default_radius", "fold", "generalized_convexity", "grid_efficiency",
    "highly_robust_kkt", "highly_robust_scan", "isolated_check", "isolated_implies_hr", "kkt_membership_residual",
    "kkt_solve", "necessary_refute", "no_descent_pair", "proper_refuter", "recheck_descent_pair",
    "recheck_scan_witness", "set_based_check", "strictness_condition", "sufficiency_certificate",
    "tradeoff_ratios", "worst_case_check",
]
