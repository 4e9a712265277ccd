"""Auditor accreditation, risk-tiered scheduling, commitment-checked audits.

A system is due at epoch e when e is a multiple of its tier's interval
(HIGH every 2 epochs, LIMITED 8, MINIMAL 32) or when it carries a pending
trigger (failed assessment, forecast flag, collusion scrutiny). Auditors
see the disclosed metric vector; the ledger sees only the commitment.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

from .compliance import RuleRegistry, evaluate_rules, metrics_commitment
from .errors import (
    EvidenceForged,
    InvalidScope,
    ScopeViolation,
    UnassignableAudit,
    UnknownAccreditor,
)
from .compliance import RuleDomain
from .identity import AISystemRecord, ComplianceStatus, RiskTier
from .ledger import Chain, EventKind
from .rng import DeterministicStream

DEFAULT_AUDIT_INTERVALS: dict[RiskTier, int] = {
    RiskTier.HIGH: 2,
    RiskTier.LIMITED: 8,
    RiskTier.MINIMAL: 32,
}
DEFAULT_AUDITOR_CAPACITY = 4


class AuditOutcome(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class AuditorCertification:
    auditor_id: str
    accrediting_body: str
    issued_epoch: int
    expiry_epoch: int
    scopes: frozenset[RuleDomain]

    def valid_at(self, epoch: int) -> bool:
        return self.issued_epoch <= epoch <= self.expiry_epoch

    def covers(self, domains: Sequence[RuleDomain]) -> bool:
        return all(d in self.scopes for d in domains)


@dataclass(frozen=True)
class AuditRecord:
    audit_id: str
    system_did: str
    auditor_id: str
    epoch: int
    findings: dict[str, bool]
    outcome: AuditOutcome
    evidence_commitment: bytes
    trigger: str

    def to_body(self) -> dict:
        return {
            "audit_id": self.audit_id,
            "did": self.system_did,
            "auditor": self.auditor_id,
            "outcome": self.outcome.value,
            "findings": dict(sorted(self.findings.items())),
            "commitment": self.evidence_commitment.hex(),
            "trigger": self.trigger,
        }


@dataclass(frozen=True)
class AuditAssignment:
    system_did: str
    auditor_id: str
    trigger: str  # "cadence" | "mitigation" | "forecast" | "collusion"


class AuditRegistry:
    def __init__(
        self,
        chain: Optional[Chain],
        rules: RuleRegistry,
        accreditors: Sequence[str],
        *,
        intervals: Optional[Mapping[RiskTier, int]] = None,
        auditor_capacity: int = DEFAULT_AUDITOR_CAPACITY,
    ):
        self.chain = chain
        self.rules = rules
        self.accreditors = set(accreditors)
        self.intervals = dict(intervals or DEFAULT_AUDIT_INTERVALS)
        self.auditor_capacity = auditor_capacity
        self.certifications: dict[str, AuditorCertification] = {}
        self.records: list[AuditRecord] = []
        self._audit_seq = 0

    # --- accreditation ---

    def accredit_auditor(
        self,
        auditor_id: str,
        body: str,
        scopes: Sequence[RuleDomain],
        validity_epochs: int,
        *,
        epoch: int = 0,
    ) -> AuditorCertification:
        if body not in self.accreditors:
            raise UnknownAccreditor(f"unknown accrediting body: {body}")
        if not scopes:
            raise InvalidScope("scopes must be non-empty")
        if validity_epochs < 1:
            raise InvalidScope("validity must be at least one epoch")
        certification = AuditorCertification(
            auditor_id=auditor_id,
            accrediting_body=body,
            issued_epoch=epoch,
            expiry_epoch=epoch + validity_epochs,
            scopes=frozenset(scopes),
        )
        self.certifications[auditor_id] = certification
        if self.chain is not None:
            self.chain.append(
                EventKind.AUDITOR_ACCREDITED,
                {"auditor_id": auditor_id, "body": body,
                 "scopes": sorted(s.value for s in certification.scopes),
                 "issued_epoch": certification.issued_epoch,
                 "expiry_epoch": certification.expiry_epoch},
                actor=body, epoch=epoch,
            )
        return certification

    # --- scheduling ---

    def _system_domains(self, system: AISystemRecord) -> list[RuleDomain]:
        return sorted({r.domain for r in self.rules.applicable(system.risk_tier)},
                      key=lambda d: d.value)

    def eligible_auditors(self, system: AISystemRecord, epoch: int) -> list[str]:
        domains = self._system_domains(system)
        out = []
        for auditor_id, certification in sorted(self.certifications.items()):
            if not certification.valid_at(epoch):
                continue
            if domains and not certification.covers(domains):
                continue
            out.append(auditor_id)
        return out

    def due_by_cadence(self, system: AISystemRecord, epoch: int) -> bool:
        if epoch < 1:
            return False
        return epoch % self.intervals[system.risk_tier] == 0

    def schedule_audits(
        self,
        epoch: int,
        systems: Mapping[str, AISystemRecord],
        *,
        triggers: Optional[Mapping[str, str]] = None,
        stream: Optional[DeterministicStream] = None,
    ) -> list[AuditAssignment]:
        """Triggered systems first, then cadence-due, round-robin assigned.

        Suspended systems are skipped. Raises UnassignableAudit when a due
        system has no eligible auditor.
        """
        triggers = dict(triggers or {})
        stream = stream or DeterministicStream(0, "audit")
        queue: list[tuple[str, str]] = []
        for did in sorted(triggers):
            system = systems.get(did)
            if system is not None and system.compliance_status != ComplianceStatus.SUSPENDED:
                queue.append((did, triggers[did]))
        for did in sorted(systems):
            system = systems[did]
            if system.compliance_status == ComplianceStatus.SUSPENDED:
                continue
            if did not in triggers and self.due_by_cadence(system, epoch):
                queue.append((did, "cadence"))
        if not queue:
            return []

        load: dict[str, int] = {a: 0 for a in self.certifications}
        assignments: list[AuditAssignment] = []
        offset = stream.randbelow(1 << 32)
        position = 0
        for did, trigger in queue:
            eligible = self.eligible_auditors(systems[did], epoch)
            if not eligible:
                raise UnassignableAudit(f"no eligible auditor for {did} at epoch {epoch}")
            chosen = None
            for step in range(len(eligible)):
                candidate = eligible[(offset + position + step) % len(eligible)]
                if load[candidate] < self.auditor_capacity:
                    chosen = candidate
                    break
            if chosen is None:
                # Capacity bound everywhere; triggered audits already sit at
                # the front of the queue, so cadence audits are what spill.
                continue
            load[chosen] += 1
            position += 1
            assignments.append(AuditAssignment(did, chosen, trigger))
        return assignments

    # --- execution ---

    def perform_audit(
        self,
        auditor_id: str,
        system: AISystemRecord,
        metrics: Mapping[str, float | bool],
        salt: bytes,
        commitment: bytes,
        *,
        epoch: int,
        trigger: str = "cadence",
    ) -> AuditRecord:
        """Verify the disclosure against the commitment, then re-run the rules.

        A mismatching disclosure records an INCONCLUSIVE audit and raises
        EvidenceForged (the penalty trigger for the caller).
        """
        certification = self.certifications.get(auditor_id)
        if certification is None or not certification.valid_at(epoch):
            raise ScopeViolation(f"{auditor_id} holds no valid certification at {epoch}")
        if not certification.covers(self._system_domains(system)):
            raise ScopeViolation(f"{auditor_id} lacks scope for {system.did}")

        self._audit_seq += 1
        audit_id = f"audit-{self._audit_seq:06d}"

        if metrics_commitment(metrics, salt) != commitment:
            record = AuditRecord(
                audit_id=audit_id, system_did=system.did, auditor_id=auditor_id,
                epoch=epoch, findings={}, outcome=AuditOutcome.INCONCLUSIVE,
                evidence_commitment=commitment, trigger=trigger,
            )
            self._record(record)
            raise EvidenceForged(
                f"disclosure for {system.did} does not match commitment "
                f"(audit {audit_id} recorded INCONCLUSIVE)"
            )

        findings, _score, compliant = evaluate_rules(system.risk_tier, metrics, self.rules)
        record = AuditRecord(
            audit_id=audit_id, system_did=system.did, auditor_id=auditor_id,
            epoch=epoch, findings=findings,
            outcome=AuditOutcome.PASS if compliant else AuditOutcome.FAIL,
            evidence_commitment=commitment, trigger=trigger,
        )
        self._record(record)
        return record

    def _record(self, record: AuditRecord) -> None:
        self.records.append(record)
        if self.chain is not None:
            self.chain.append(EventKind.AUDIT_RECORDED, record.to_body(),
                              actor=record.auditor_id, epoch=record.epoch)

    def outcomes_for(self, did: str, epoch: int) -> list[AuditOutcome]:
        return [r.outcome for r in self.records
                if r.system_did == did and r.epoch == epoch]
