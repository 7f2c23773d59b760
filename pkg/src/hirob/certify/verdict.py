"""Check outcomes and how they combine."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import reduce

from ..errors import ValidationError


class Status(enum.Enum):
    REFUTED = "Refuted"
    CERTIFIED = "Certified"
    CONSISTENT = "ConsistentAtResolution"
    INCONCLUSIVE = "Inconclusive"


class CertificateKind(enum.Enum):
    ISOLATED_EFFICIENCY = "IsolatedEfficiency"
    GENERALIZED_CONVEX_KKT = "GeneralizedConvexKKT"


@dataclass(frozen=True)
class Verdict:
    status: Status
    witness: dict | None = None
    certificate_kind: CertificateKind | None = None
    resolution: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        if self.status is Status.REFUTED and not self.witness:
            raise ValidationError("a refutation must carry a witness")
        if self.status is Status.CERTIFIED and self.certificate_kind is None:
            raise ValidationError("a certificate must name its kind")

    @property
    def refuted(self) -> bool:
        return self.status is Status.REFUTED

    @classmethod
    def refuted_by(cls, witness: dict, resolution: dict, note: str = "") -> "Verdict":
        return cls(Status.REFUTED, witness, None, resolution, note)

    @classmethod
    def consistent(cls, resolution: dict, note: str = "") -> "Verdict":
        return cls(Status.CONSISTENT, None, None, resolution, note)

    @classmethod
    def inconclusive(cls, resolution: dict, note: str = "", witness: dict | None = None) -> "Verdict":
        return cls(Status.INCONCLUSIVE, witness, None, resolution, note)

    @classmethod
    def certified(cls, kind: CertificateKind, evidence: dict, resolution: dict, note: str = "") -> "Verdict":
        return cls(Status.CERTIFIED, evidence, kind, resolution, note)


def combine(a: Verdict, b: Verdict) -> Verdict:
    """Associative, commutative fold: a refutation absorbs everything else.

    Without a refutation, any inconclusive check makes the whole inconclusive;
    the fold is certified only when every part is.
    """
    for status in (Status.REFUTED, Status.INCONCLUSIVE, Status.CONSISTENT):
        if status in (a.status, b.status):
            hits = [v for v in (a, b) if v.status is status]
            if status is Status.REFUTED:
                return hits[0]
            return Verdict(status, hits[0].witness, None, {**b.resolution, **a.resolution},
                           "; ".join(n for n in (a.note, b.note) if n))
    return a


def fold(verdicts) -> Verdict:
    verdicts = list(verdicts)
    if not verdicts:
        raise ValueError("nothing to fold")
    return reduce(combine, verdicts)
