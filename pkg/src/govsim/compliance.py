"""Rule-engine compliance evaluation.

Rules are versioned condition trees over named metrics, authored directly
in a structured JSON form. Evaluation is deterministic; the on-ledger
assessment record carries per-rule verdicts, the aggregate score and a
commitment to the metric vector, never the metric values themselves.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .encoding import canonical_json_bytes, sha256
from .errors import (
    AlreadyDisputed,
    DuplicateFeed,
    GovernanceRequired,
    InvalidInput,
    InvalidPanel,
    InvalidRule,
    MissingInput,
    UnknownOracle,
)
from .governance import Proposal, ProposalKind, ProposalStatus
from .identity import AISystemRecord, RiskTier
from .ledger import Chain, EventKind
from .rng import DeterministicStream

logger = logging.getLogger(__name__)

MAX_PREDICATE_DEPTH = 16

_COMPARISONS = {">=", "<=", ">", "<", "==", "!="}
_COMBINATORS = {"and", "or"}


class RuleDomain(str, Enum):
    DATA_PRIVACY = "DATA_PRIVACY"
    RISK_ASSESSMENT = "RISK_ASSESSMENT"
    CAPITAL_ADEQUACY = "CAPITAL_ADEQUACY"
    TRANSPARENCY = "TRANSPARENCY"


# --- predicates ---

def validate_predicate(tree: dict, declared_metrics: Sequence[str],
                       _depth: int = 1) -> None:
    """Structural check: known ops, declared metrics, bounded depth."""
    if _depth > MAX_PREDICATE_DEPTH:
        raise InvalidRule(f"predicate deeper than {MAX_PREDICATE_DEPTH}")
    if not isinstance(tree, dict) or "op" not in tree:
        raise InvalidRule("predicate node must be an object with an 'op'")
    op = tree["op"]
    if op in _COMBINATORS:
        args = tree.get("args")
        if not isinstance(args, list) or not args:
            raise InvalidRule(f"'{op}' needs a non-empty 'args' list")
        for arg in args:
            validate_predicate(arg, declared_metrics, _depth + 1)
    elif op == "not":
        if "arg" not in tree:
            raise InvalidRule("'not' needs an 'arg'")
        validate_predicate(tree["arg"], declared_metrics, _depth + 1)
    elif op in _COMPARISONS:
        metric = tree.get("metric")
        if not isinstance(metric, str):
            raise InvalidRule(f"comparison '{op}' needs a 'metric' name")
        if metric not in declared_metrics:
            raise InvalidRule(f"undeclared metric: {metric}")
        if "value" not in tree:
            raise InvalidRule(f"comparison '{op}' needs a 'value'")
        if not isinstance(tree["value"], (int, float, bool)):
            raise InvalidRule("comparison value must be numeric or boolean")
    else:
        raise InvalidRule(f"unknown predicate op: {op!r}")


def evaluate_predicate(tree: dict, metrics: Mapping[str, float | bool]) -> bool:
    op = tree["op"]
    if op == "and":
        return all(evaluate_predicate(a, metrics) for a in tree["args"])
    if op == "or":
        return any(evaluate_predicate(a, metrics) for a in tree["args"])
    if op == "not":
        return not evaluate_predicate(tree["arg"], metrics)
    metric = tree["metric"]
    if metric not in metrics:
        raise MissingInput(f"metric not supplied: {metric}")
    left, right = metrics[metric], tree["value"]
    if op == ">=":
        return left >= right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == "<":
        return left < right
    if op == "==":
        return left == right
    return left != right


# --- rules ---

@dataclass(frozen=True)
class ComplianceRuleModule:
    rule_id: str
    domain: RuleDomain
    predicate: dict
    metrics: tuple[str, ...]
    mandatory: bool = True
    applicable_tiers: frozenset[RiskTier] = frozenset(
        {RiskTier.HIGH, RiskTier.LIMITED, RiskTier.MINIMAL}
    )
    weight: int = 1
    version: int = 1

    def applies_to(self, tier: RiskTier) -> bool:
        return tier in self.applicable_tiers

    def to_json(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "domain": self.domain.value,
            "version": self.version,
            "mandatory": self.mandatory,
            "applicable_tiers": sorted(t.value for t in self.applicable_tiers),
            "metrics": list(self.metrics),
            "weight": self.weight,
            "predicate": self.predicate,
        }


GENESIS_AUTHORIZATION = "genesis"


class RuleRegistry:
    """Versioned rule store; updates never mutate prior versions."""

    def __init__(self, chain: Optional[Chain] = None):
        self.chain = chain
        self._versions: dict[str, list[ComplianceRuleModule]] = {}

    def register_rule(
        self,
        rule: ComplianceRuleModule,
        authorization: Proposal | str | None,
        *,
        epoch: int = 0,
    ) -> int:
        """Store the rule at the next version; needs a passed RULE_UPDATE proposal.

        ``GENESIS_AUTHORIZATION`` is accepted only for scenario bootstrap,
        before governance exists to vote.
        """
        if isinstance(authorization, Proposal):
            if (authorization.kind != ProposalKind.RULE_UPDATE
                    or authorization.status != ProposalStatus.PASSED):
                raise GovernanceRequired("needs a PASSED RULE_UPDATE proposal")
            auth_label = authorization.proposal_id
        elif authorization == GENESIS_AUTHORIZATION:
            auth_label = GENESIS_AUTHORIZATION
        else:
            raise GovernanceRequired("rule registration requires governance approval")
        validate_predicate(rule.predicate, rule.metrics)
        history = self._versions.setdefault(rule.rule_id, [])
        versioned = ComplianceRuleModule(
            rule_id=rule.rule_id,
            domain=rule.domain,
            predicate=rule.predicate,
            metrics=rule.metrics,
            mandatory=rule.mandatory,
            applicable_tiers=rule.applicable_tiers,
            weight=rule.weight,
            version=len(history) + 1,
        )
        history.append(versioned)
        if self.chain is not None:
            self.chain.append(
                EventKind.RULE_REGISTERED,
                {"rule_id": versioned.rule_id, "domain": versioned.domain.value,
                 "version": versioned.version, "mandatory": versioned.mandatory,
                 "applicable_tiers": sorted(t.value for t in versioned.applicable_tiers),
                 "authorization": auth_label},
                actor="governance", epoch=epoch,
            )
        return versioned.version

    def get(self, rule_id: str, version: Optional[int] = None) -> ComplianceRuleModule:
        history = self._versions[rule_id]
        return history[-1] if version is None else history[version - 1]

    def active_rules(self) -> list[ComplianceRuleModule]:
        return [history[-1] for _, history in sorted(self._versions.items())]

    def applicable(self, tier: RiskTier) -> list[ComplianceRuleModule]:
        return [r for r in self.active_rules() if r.applies_to(tier)]


# --- assessment ---

@dataclass
class Assessment:
    system_did: str
    epoch: int
    results: dict[str, bool]
    metric_values: dict[str, float | bool]
    aggregate_score: Fraction
    compliant: bool
    commitment: bytes
    salt: bytes
    tier: RiskTier

    def to_body(self) -> dict:
        """Ledger payload: verdicts and commitment only, never metric values."""
        return {
            "did": self.system_did,
            "epoch": self.epoch,
            "tier": self.tier.value,
            "results": dict(sorted(self.results.items())),
            "score": str(self.aggregate_score),
            "compliant": self.compliant,
            "commitment": self.commitment.hex(),
        }


def metrics_commitment(metrics: Mapping[str, float | bool], salt: bytes) -> bytes:
    """Hash binding of the metric vector: sha256(canonical bytes || salt)."""
    return sha256(canonical_json_bytes(dict(metrics)) + salt)


def evaluate_rules(
    tier: RiskTier,
    metrics: Mapping[str, float | bool],
    registry: RuleRegistry,
) -> tuple[dict[str, bool], Fraction, bool]:
    """Pure core: per-rule verdicts, aggregate score, compliant flag."""
    rules = registry.applicable(tier)
    if not rules:
        logger.warning("no applicable rules for tier %s: vacuously compliant",
                       tier.value)
        return {}, Fraction(1), True
    results: dict[str, bool] = {}
    passed_weight = 0
    total_weight = 0
    for rule in rules:
        outcome = evaluate_predicate(rule.predicate, metrics)
        results[rule.rule_id] = outcome
        total_weight += rule.weight
        if outcome:
            passed_weight += rule.weight
    compliant = all(results[r.rule_id] for r in rules if r.mandatory)
    return results, Fraction(passed_weight, total_weight), compliant


def evaluate(
    system: AISystemRecord,
    metrics: Mapping[str, float | bool],
    epoch: int,
    registry: RuleRegistry,
    chain: Optional[Chain] = None,
    *,
    salt: bytes = b"\x00" * 32,
) -> Assessment:
    """Assess one system snapshot and record the outcome on the ledger."""
    results, score, compliant = evaluate_rules(system.risk_tier, metrics, registry)
    assessment = Assessment(
        system_did=system.did,
        epoch=epoch,
        results=results,
        metric_values=dict(metrics),
        aggregate_score=score,
        compliant=compliant,
        commitment=metrics_commitment(metrics, salt),
        salt=salt,
        tier=system.risk_tier,
    )
    if chain is not None:
        chain.append(EventKind.ASSESSMENT_RECORDED, assessment.to_body(),
                     actor=system.did, epoch=epoch)
    return assessment


# --- oracle feeds ---

@dataclass(frozen=True)
class OracleFeed:
    feed_id: str
    epoch: int
    values: Mapping[str, float | bool | int]
    signer: str


REGULATION_VERSION_KEY = "regulation_version"


class OracleBook:
    """Immutable per-(feed_id, epoch) feed store."""

    def __init__(self, chain: Optional[Chain], oracle_authorities: Sequence[str]):
        self.chain = chain
        self.authorities = set(oracle_authorities)
        self._feeds: dict[tuple[str, int], OracleFeed] = {}
        self._regulation_version: Optional[float] = None

    def ingest(self, feed: OracleFeed) -> bool:
        """Store a feed; returns True when it bumps the regulation version."""
        if feed.signer not in self.authorities:
            raise UnknownOracle(f"unknown oracle signer: {feed.signer}")
        key = (feed.feed_id, feed.epoch)
        if key in self._feeds:
            raise DuplicateFeed(f"feed {feed.feed_id} already ingested for epoch {feed.epoch}")
        # Defensive copy: feed values are immutable once ingested.
        self._feeds[key] = OracleFeed(feed.feed_id, feed.epoch,
                                      dict(feed.values), feed.signer)
        if self.chain is not None:
            self.chain.append(
                EventKind.ORACLE_UPDATE,
                {"feed_id": feed.feed_id, "epoch": feed.epoch,
                 "signer": feed.signer, "values": dict(sorted(feed.values.items()))},
                actor=feed.signer, epoch=feed.epoch,
            )
        new_version = feed.values.get(REGULATION_VERSION_KEY)
        if new_version is not None and new_version != self._regulation_version:
            self._regulation_version = new_version
            return True
        return False

    def values_for(self, epoch: int) -> dict[str, float | bool | int]:
        """Merged values across this epoch's feeds, in feed_id order."""
        merged: dict[str, float | bool | int] = {}
        for (feed_id, feed_epoch), feed in sorted(self._feeds.items()):
            if feed_epoch == epoch:
                merged.update(feed.values)
        return merged


# --- disputes ---

@dataclass
class Dispute:
    assessment: Assessment
    challenger: str
    panel: list[str]
    resolved: bool = False
    overturned: bool = False


class DisputeCourt:
    """Arbitration over recorded assessments by seeded panels of auditors."""

    def __init__(self, chain: Optional[Chain], stream: Optional[DeterministicStream] = None):
        self.chain = chain
        self.stream = stream or DeterministicStream(0, "disputes")
        self._by_assessment: dict[tuple[str, int], Dispute] = {}

    def open_dispute(
        self,
        assessment: Assessment,
        challenger: str,
        *,
        system_owner: str,
        eligible_auditors: Sequence[str],
        panel_size: int = 3,
    ) -> Dispute:
        if challenger == system_owner:
            raise InvalidInput("challenger must be distinct from the system owner")
        key = (assessment.system_did, assessment.epoch)
        if key in self._by_assessment:
            raise AlreadyDisputed(f"assessment {key} already disputed")
        if panel_size % 2 == 0 or panel_size < 3:
            raise InvalidPanel("panel must be odd and at least 3")
        pool = sorted(set(eligible_auditors) - {challenger, system_owner})
        if len(pool) < panel_size:
            raise InvalidPanel(f"only {len(pool)} eligible panelists for size {panel_size}")
        panel = sorted(self.stream.sample(pool, panel_size))
        dispute = Dispute(assessment=assessment, challenger=challenger, panel=panel)
        self._by_assessment[key] = dispute
        return dispute

    def resolve_dispute(self, dispute: Dispute, panel_votes: Sequence[str]) -> Assessment:
        """Majority decides; 'overturn' flips the compliant flag and re-records."""
        if dispute.resolved:
            raise AlreadyDisputed("dispute already resolved")
        if len(panel_votes) != len(dispute.panel) or len(panel_votes) % 2 == 0:
            raise InvalidPanel("votes must match the odd-sized panel")
        for vote in panel_votes:
            if vote not in ("uphold", "overturn"):
                raise InvalidInput(f"panel vote must be uphold/overturn, got {vote!r}")
        overturns = sum(1 for v in panel_votes if v == "overturn")
        dispute.resolved = True
        dispute.overturned = overturns * 2 > len(panel_votes)
        assessment = dispute.assessment
        if dispute.overturned:
            assessment.compliant = not assessment.compliant
            if self.chain is not None:
                body = assessment.to_body()
                body["corrected_by_dispute"] = True
                self.chain.append(EventKind.ASSESSMENT_RECORDED, body,
                                  actor="arbitration-panel", epoch=assessment.epoch)
        return assessment


# Desk-scale starter rule pack. Thresholds are stand-ins, not legal claims.
def standard_rule_pack() -> list[ComplianceRuleModule]:
    high_plus = frozenset({RiskTier.HIGH, RiskTier.LIMITED})
    return [
        ComplianceRuleModule(
            rule_id="capital-adequacy-min",
            domain=RuleDomain.CAPITAL_ADEQUACY,
            predicate={"op": ">=", "metric": "capital_ratio", "value": 0.08},
            metrics=("capital_ratio",),
            applicable_tiers=high_plus,
        ),
        ComplianceRuleModule(
            rule_id="privacy-consent",
            domain=RuleDomain.DATA_PRIVACY,
            predicate={"op": "==", "metric": "data_privacy_consent", "value": True},
            metrics=("data_privacy_consent",),
        ),
        ComplianceRuleModule(
            rule_id="bias-ceiling",
            domain=RuleDomain.RISK_ASSESSMENT,
            predicate={"op": "<=", "metric": "model_bias_metric", "value": 0.2},
            metrics=("model_bias_metric",),
            applicable_tiers=frozenset({RiskTier.HIGH}),
        ),
        ComplianceRuleModule(
            rule_id="audit-trail-complete",
            domain=RuleDomain.TRANSPARENCY,
            predicate={"op": "==", "metric": "audit_trail_complete", "value": True},
            metrics=("audit_trail_complete",),
            mandatory=False,
        ),
    ]
