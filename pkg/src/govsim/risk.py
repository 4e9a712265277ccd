"""Continuous risk scoring, tier reclassification, incidents, forecasting.

The score blends the latest compliance aggregate, last epoch's audit
failures, open incidents and a static exposure weight:

    score = clamp01(wa*(1-a) + wf*f + wi*min(i,3)/3 + ww*w)

with default weights 0.5/0.2/0.2/0.1. Tier cuts at 0.9/0.6/0.3 map scores
onto the four-tier taxonomy; the registry stores the authoritative tier,
written through on every change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from .errors import InsufficientHistory, InvalidInput, TerminalState
from .identity import ComplianceStatus, DidRegistry, RiskTier
from .ledger import Chain, EventKind


@dataclass(frozen=True)
class RiskWeights:
    noncompliance: Fraction = Fraction(1, 2)
    audit_failure: Fraction = Fraction(1, 5)
    incidents: Fraction = Fraction(1, 5)
    exposure: Fraction = Fraction(1, 10)


@dataclass(frozen=True)
class TierThresholds:
    unacceptable: Fraction = Fraction(9, 10)
    high: Fraction = Fraction(3, 5)
    limited: Fraction = Fraction(3, 10)


def compute_risk_score(
    compliance_aggregate: Fraction,
    audit_failed: bool,
    incident_count: int,
    exposure: Fraction,
    weights: RiskWeights = RiskWeights(),
) -> Fraction:
    """Exact risk score in [0, 1]; 1 is maximal risk."""
    if not 0 <= compliance_aggregate <= 1:
        raise InvalidInput("compliance aggregate must be in [0, 1]")
    if not 0 <= exposure <= 1:
        raise InvalidInput("exposure weight must be in [0, 1]")
    if incident_count < 0:
        raise InvalidInput("incident count must be non-negative")
    score = (
        weights.noncompliance * (1 - compliance_aggregate)
        + weights.audit_failure * (1 if audit_failed else 0)
        + weights.incidents * Fraction(min(incident_count, 3), 3)
        + weights.exposure * exposure
    )
    return max(Fraction(0), min(Fraction(1), score))


def tier_for_score(score: Fraction, thresholds: TierThresholds = TierThresholds()) -> RiskTier:
    if score >= thresholds.unacceptable:
        return RiskTier.UNACCEPTABLE
    if score >= thresholds.high:
        return RiskTier.HIGH
    if score >= thresholds.limited:
        return RiskTier.LIMITED
    return RiskTier.MINIMAL


# --- forecasting ---

DEFAULT_EWMA_ALPHA = 0.3
DEFAULT_FORECAST_FLOOR = 0.7


def forecast_compliance(
    history: Sequence[float],
    alpha: float = DEFAULT_EWMA_ALPHA,
    *,
    floor: float = DEFAULT_FORECAST_FLOOR,
) -> tuple[float, bool]:
    """EWMA over the aggregate-score series; flags forecasts below the floor."""
    if not history:
        raise InsufficientHistory("forecast needs at least one observation")
    if not 0 < alpha < 1:
        raise InvalidInput("alpha must be in (0, 1)")
    smoothed = float(history[0])
    for value in history[1:]:
        smoothed = alpha * float(value) + (1 - alpha) * smoothed
    return smoothed, smoothed < floor


# --- incidents ---

class Severity(str, Enum):
    LOW = "LOW"
    MEDIUM = "MEDIUM"
    CRITICAL = "CRITICAL"


class IncidentState(str, Enum):
    RAISED = "RAISED"
    CONTAINED = "CONTAINED"
    RESOLVED = "RESOLVED"
    POSTMORTEM_FILED = "POSTMORTEM_FILED"


INCIDENT_ORDER = [
    IncidentState.RAISED,
    IncidentState.CONTAINED,
    IncidentState.RESOLVED,
    IncidentState.POSTMORTEM_FILED,
]


@dataclass
class Incident:
    incident_id: str
    system_did: str
    severity: Severity
    state: IncidentState = IncidentState.RAISED
    transitions: list[tuple[str, int]] = field(default_factory=list)

    def open_(self) -> bool:
        """Counts toward the risk score until resolved."""
        return self.state in (IncidentState.RAISED, IncidentState.CONTAINED)


class IncidentLog:
    def __init__(self, chain: Optional[Chain], registry: Optional[DidRegistry] = None):
        self.chain = chain
        self.registry = registry
        self.incidents: list[Incident] = []
        self._seq = 0

    def raise_incident(self, system_did: str, severity: Severity, *, epoch: int = 0) -> Incident:
        """Open an incident; CRITICAL suspends the system until resolved."""
        if self.registry is not None:
            self.registry.get(system_did)  # existence check
        self._seq += 1
        incident = Incident(
            incident_id=f"incident-{self._seq:04d}",
            system_did=system_did,
            severity=severity,
        )
        incident.transitions.append((IncidentState.RAISED.value, epoch))
        self.incidents.append(incident)
        if self.chain is not None:
            self.chain.append(
                EventKind.INCIDENT_RAISED,
                {"incident_id": incident.incident_id, "did": system_did,
                 "severity": severity.value, "state": incident.state.value},
                actor="incident-response", epoch=epoch,
            )
        if severity == Severity.CRITICAL and self.registry is not None:
            self.registry.system_set_status(
                system_did, ComplianceStatus.SUSPENDED,
                epoch=epoch, actor="incident-response",
            )
        return incident

    def advance_incident(self, incident: Incident, *, epoch: int = 0) -> IncidentState:
        """Step one state forward; restores a suspended system on RESOLVED."""
        position = INCIDENT_ORDER.index(incident.state)
        if position == len(INCIDENT_ORDER) - 1:
            raise TerminalState(f"{incident.incident_id} already at POSTMORTEM_FILED")
        incident.state = INCIDENT_ORDER[position + 1]
        incident.transitions.append((incident.state.value, epoch))
        if self.chain is not None:
            self.chain.append(
                EventKind.INCIDENT_ADVANCED,
                {"incident_id": incident.incident_id, "did": incident.system_did,
                 "state": incident.state.value},
                actor="incident-response", epoch=epoch,
            )
        if (incident.state == IncidentState.RESOLVED
                and incident.severity == Severity.CRITICAL
                and self.registry is not None):
            record = self.registry.get(incident.system_did)
            if record.compliance_status == ComplianceStatus.SUSPENDED:
                self.registry.system_set_status(
                    incident.system_did, ComplianceStatus.UNDER_REVIEW,
                    epoch=epoch, actor="incident-response",
                )
        return incident.state

    def open_count(self, system_did: str) -> int:
        return sum(1 for i in self.incidents if i.system_did == system_did and i.open_())


# --- profiles and write-through ---

@dataclass
class RiskProfile:
    system_did: str
    score: Fraction = Fraction(0)
    tier: Optional[RiskTier] = None
    history: list[tuple[int, Fraction, Fraction]] = field(default_factory=list)


class RiskEngine:
    def __init__(
        self,
        chain: Optional[Chain],
        registry: DidRegistry,
        *,
        weights: RiskWeights = RiskWeights(),
        thresholds: TierThresholds = TierThresholds(),
    ):
        self.chain = chain
        self.registry = registry
        self.weights = weights
        self.thresholds = thresholds
        self.profiles: dict[str, RiskProfile] = {}

    def update(
        self,
        system_did: str,
        epoch: int,
        compliance_aggregate: Fraction,
        *,
        audit_failed: bool = False,
        incident_count: int = 0,
        exposure: Fraction = Fraction(1, 2),
    ) -> tuple[Fraction, RiskTier, bool]:
        """Recompute the score; reclassify (and write through) on tier change."""
        record = self.registry.get(system_did)
        score = compute_risk_score(
            compliance_aggregate, audit_failed, incident_count, exposure, self.weights
        )
        tier = tier_for_score(score, self.thresholds)
        profile = self.profiles.setdefault(system_did, RiskProfile(system_did))
        profile.score = score
        profile.history.append((epoch, score, compliance_aggregate))
        changed = tier != record.risk_tier
        if changed:
            old_tier = record.risk_tier
            if self.chain is not None:
                self.chain.append(
                    EventKind.RISK_RECLASSIFIED,
                    {"did": system_did, "score": str(score),
                     "old_tier": old_tier.value, "new_tier": tier.value},
                    actor="risk-engine", epoch=epoch,
                )
            self.registry.system_reclassify(system_did, tier, epoch=epoch)
        profile.tier = tier
        return score, tier, changed
