"""Deterministic discrete-event scenario runner.

Each epoch executes a fixed phase order:

    1 oracle ingest + injected events     6 proposals, votes, tallies,
    2 compliance evaluation                 weight staging, collusion scan
    3 incident advance, risk scoring,     7 delegate elections (period epochs)
      reclassification, forecasting       8 reward distribution
    4 audit scheduling + execution        9 block sealing
    5 penalties and slashes

Setup (registries, genesis mint, funding, accreditation, registration,
initial election) runs as phase 0 of epoch 0 and seals together with the
first epoch. All randomness flows from counter-based streams derived from
the scenario seed, one stream per consumer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Optional

from . import audit as audit_mod
from . import compliance as compliance_mod
from . import governance as governance_mod
from . import risk as risk_mod
from .encoding import as_fraction, canonical_json_bytes, sha256
from .errors import (
    GovSimError,
    InsufficientCandidates,
    ScenarioError,
)
from .identity import (
    ComplianceStatus,
    ContentStore,
    DidRegistry,
    RiskTier,
    Role,
)
from .keys import get_scheme
from .ledger import Chain, EventKind, verify_chain
from .report import build_report, load_report
from .rng import DeterministicStream
from .tokens import Pool, SlashReason, TokenLedger

# Phase indices; phase 0 is scenario setup.
PHASE_SETUP = 0
PHASE_INGEST = 1
PHASE_COMPLIANCE = 2
PHASE_RISK = 3
PHASE_AUDIT = 4
PHASE_PENALTIES = 5
PHASE_GOVERNANCE = 6
PHASE_ELECTIONS = 7
PHASE_REWARDS = 8
PHASE_SEALING = 9

# Designated phases per event kind; the scan test holds every trace to this.
PHASE_OF_KIND: dict[EventKind, frozenset[int]] = {
    EventKind.HEARTBEAT: frozenset({PHASE_INGEST}),
    EventKind.ORACLE_UPDATE: frozenset({PHASE_INGEST}),
    EventKind.INCIDENT_RAISED: frozenset({PHASE_INGEST}),
    EventKind.DID_REGISTERED: frozenset({PHASE_SETUP}),
    EventKind.AUDITOR_ACCREDITED: frozenset({PHASE_SETUP}),
    EventKind.RULE_REGISTERED: frozenset({PHASE_SETUP, PHASE_GOVERNANCE}),
    EventKind.TOKENS_TRANSFERRED: frozenset({PHASE_SETUP, PHASE_GOVERNANCE, PHASE_REWARDS}),
    EventKind.STAKE_CHANGED: frozenset({PHASE_SETUP}),
    EventKind.DID_UPDATED: frozenset(
        {PHASE_INGEST, PHASE_COMPLIANCE, PHASE_RISK, PHASE_PENALTIES}),
    EventKind.ACCESS_LOGGED: frozenset(
        {PHASE_INGEST, PHASE_COMPLIANCE, PHASE_RISK, PHASE_PENALTIES}),
    EventKind.ASSESSMENT_RECORDED: frozenset({PHASE_COMPLIANCE}),
    EventKind.RISK_RECLASSIFIED: frozenset({PHASE_RISK}),
    EventKind.INCIDENT_ADVANCED: frozenset({PHASE_RISK}),
    EventKind.AUDIT_RECORDED: frozenset({PHASE_AUDIT}),
    EventKind.SLASH_APPLIED: frozenset({PHASE_PENALTIES}),
    EventKind.PROPOSAL_SUBMITTED: frozenset({PHASE_GOVERNANCE}),
    EventKind.VOTE_CAST: frozenset({PHASE_GOVERNANCE}),
    EventKind.PROPOSAL_RESOLVED: frozenset({PHASE_GOVERNANCE}),
    EventKind.WEIGHTS_ADJUSTED: frozenset({PHASE_GOVERNANCE}),
    EventKind.COLLUSION_FLAGGED: frozenset({PHASE_GOVERNANCE}),
    EventKind.DELEGATE_ELECTED: frozenset({PHASE_SETUP, PHASE_ELECTIONS}),
}

INJECTION_KINDS = {"VIOLATION", "COLLUSION", "REGULATION_CHANGE", "INCIDENT", "PROPOSAL"}

# Priority order when one system accrues several audit triggers in an epoch.
_TRIGGER_PRIORITY = ["collusion", "mitigation", "violation", "forecast"]


@dataclass
class SimConfig:
    block_capacity: int = 100
    signature_scheme: str = "seeded"
    quorum: Optional[int] = None
    n_seats: int = 3
    election_period: int = 4
    cap_fraction: Fraction = Fraction(1, 5)
    regulator_multiplier: Fraction = Fraction(3, 2)
    role_multiplier: dict[str, Fraction] = field(default_factory=dict)
    threshold_routine: Fraction = Fraction(1, 2)
    threshold_critical: Fraction = Fraction(2, 3)
    collusion_min_common: int = 10
    collusion_agreement: Fraction = Fraction(9, 10)
    collusion_penalty: Fraction = Fraction(9, 10)
    audit_intervals: dict[RiskTier, int] = field(
        default_factory=lambda: dict(audit_mod.DEFAULT_AUDIT_INTERVALS))
    auditor_capacity: int = 4
    risk_weights: risk_mod.RiskWeights = field(default_factory=risk_mod.RiskWeights)
    tier_thresholds: risk_mod.TierThresholds = field(default_factory=risk_mod.TierThresholds)
    ewma_alpha: float = 0.3
    forecast_floor: float = 0.7
    total_supply: int = 1_000_000_000
    pool_fractions: dict[Pool, Fraction] = field(default_factory=dict)
    emission_divisor: int = 1000
    slash_fractions: dict[SlashReason, Fraction] = field(default_factory=dict)
    funding_pool: Pool = Pool.DEVELOPMENT

    def __post_init__(self):
        from .tokens import DEFAULT_POOL_FRACTIONS, DEFAULT_SLASH_FRACTIONS

        if not isinstance(self.pool_fractions, dict) or not self.pool_fractions:
            self.pool_fractions = dict(DEFAULT_POOL_FRACTIONS)
        if not self.slash_fractions:
            self.slash_fractions = dict(DEFAULT_SLASH_FRACTIONS)

    def vote_weights(self) -> governance_mod.VoteWeights:
        multipliers = {Role.REGULATOR: self.regulator_multiplier}
        for role_name, multiplier in self.role_multiplier.items():
            multipliers[Role(role_name)] = multiplier
        return governance_mod.VoteWeights(
            role_multiplier=multipliers,
            cap_fraction=self.cap_fraction,
            threshold_routine=self.threshold_routine,
            threshold_critical=self.threshold_critical,
        ).validate()

    def to_snapshot(self) -> dict:
        """JSON-able effective config, embedded in the genesis event."""
        return {
            "block_capacity": self.block_capacity,
            "signature_scheme": self.signature_scheme,
            "n_seats": self.n_seats,
            "election_period": self.election_period,
            "cap_fraction": str(self.cap_fraction),
            "threshold_routine": str(self.threshold_routine),
            "threshold_critical": str(self.threshold_critical),
            "collusion": {
                "min_common": self.collusion_min_common,
                "agreement": str(self.collusion_agreement),
                "penalty": str(self.collusion_penalty),
            },
            "audit_intervals": {t.value: i for t, i in sorted(
                self.audit_intervals.items(), key=lambda kv: kv[0].value)},
            "auditor_capacity": self.auditor_capacity,
            "risk_weights": {
                "noncompliance": str(self.risk_weights.noncompliance),
                "audit_failure": str(self.risk_weights.audit_failure),
                "incidents": str(self.risk_weights.incidents),
                "exposure": str(self.risk_weights.exposure),
            },
            "tier_thresholds": {
                "unacceptable": str(self.tier_thresholds.unacceptable),
                "high": str(self.tier_thresholds.high),
                "limited": str(self.tier_thresholds.limited),
            },
            "ewma_alpha": self.ewma_alpha,
            "forecast_floor": self.forecast_floor,
            "emission_divisor": self.emission_divisor,
            "funding_pool": self.funding_pool.value,
        }


@dataclass
class StakeholderSpec:
    id: str
    role: Role
    balance: int = 0
    stakes: list[dict] = field(default_factory=list)
    auditor: Optional[dict] = None


@dataclass
class SystemSpec:
    id: str
    owner: str
    purpose: str
    risk_tier: RiskTier
    exposure: Fraction = Fraction(1, 2)
    base_metrics: dict[str, Any] = field(default_factory=dict)
    metadata: Optional[dict] = None
    public_key: Optional[bytes] = None


@dataclass
class SimScenario:
    seed: int
    epochs: int
    config: SimConfig
    authorities: list[str]
    oracle_authorities: list[str]
    accreditors: list[str]
    stakeholders: list[StakeholderSpec]
    ai_systems: list[SystemSpec]
    rules: list[compliance_mod.ComplianceRuleModule]
    oracle_feeds: list[dict]
    injected_events: list[dict]
    raw: dict


def _fail(path: str, message: str) -> None:
    raise ScenarioError(f"{path}: {message}")


def _parse_config(raw: Mapping[str, Any]) -> SimConfig:
    config = SimConfig()
    simple_ints = {
        "block_capacity", "n_seats", "election_period", "collusion_min_common",
        "auditor_capacity", "total_supply", "emission_divisor", "quorum",
    }
    fractions = {
        "cap_fraction", "regulator_multiplier", "threshold_routine",
        "threshold_critical", "collusion_agreement", "collusion_penalty",
    }
    for key, value in raw.items():
        if key == "quorum" and value is None:
            continue
        if key in simple_ints:
            setattr(config, key, int(value))
        elif key in fractions:
            setattr(config, key, as_fraction(value))
        elif key == "signature_scheme":
            config.signature_scheme = str(value)
        elif key == "role_multiplier":
            config.role_multiplier = {r: as_fraction(m) for r, m in value.items()}
        elif key == "audit_intervals":
            config.audit_intervals = {RiskTier(t): int(i) for t, i in value.items()}
        elif key == "risk_weights":
            config.risk_weights = risk_mod.RiskWeights(
                noncompliance=as_fraction(value["noncompliance"]),
                audit_failure=as_fraction(value["audit_failure"]),
                incidents=as_fraction(value["incidents"]),
                exposure=as_fraction(value["exposure"]),
            )
        elif key == "tier_thresholds":
            config.tier_thresholds = risk_mod.TierThresholds(
                unacceptable=as_fraction(value["unacceptable"]),
                high=as_fraction(value["high"]),
                limited=as_fraction(value["limited"]),
            )
        elif key == "ewma_alpha":
            config.ewma_alpha = float(value)
        elif key == "forecast_floor":
            config.forecast_floor = float(value)
        elif key == "pool_fractions":
            config.pool_fractions = {Pool(p): as_fraction(f) for p, f in value.items()}
        elif key == "slash_fractions":
            config.slash_fractions = {
                SlashReason(r): as_fraction(f) for r, f in value.items()}
        elif key == "funding_pool":
            config.funding_pool = Pool(value)
        else:
            _fail(f"config.{key}", "unknown config key")
    return config


def _parse_rule(raw: Mapping[str, Any], path: str) -> compliance_mod.ComplianceRuleModule:
    try:
        rule = compliance_mod.ComplianceRuleModule(
            rule_id=raw["rule_id"],
            domain=compliance_mod.RuleDomain(raw["domain"]),
            predicate=raw["predicate"],
            metrics=tuple(raw["metrics"]),
            mandatory=bool(raw.get("mandatory", True)),
            applicable_tiers=frozenset(
                RiskTier(t) for t in raw.get(
                    "applicable_tiers", ["HIGH", "LIMITED", "MINIMAL"])),
            weight=int(raw.get("weight", 1)),
        )
    except (KeyError, ValueError) as exc:
        _fail(path, f"bad rule: {exc}")
    try:
        compliance_mod.validate_predicate(rule.predicate, rule.metrics)
    except GovSimError as exc:
        _fail(f"{path}.predicate", str(exc))
    return rule


def load_scenario(source: str | Path | Mapping[str, Any]) -> SimScenario:
    """Parse and validate a scenario; errors carry the offending field path."""
    if isinstance(source, (str, Path)):
        try:
            raw = json.loads(Path(source).read_text("utf-8"))
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    else:
        raw = dict(source)

    if not isinstance(raw.get("seed", 0), int):
        _fail("seed", "must be an integer")
    epochs = raw.get("epochs")
    if not isinstance(epochs, int) or epochs < 1:
        _fail("epochs", "must be a positive integer")
    config = _parse_config(raw.get("config", {}))

    authorities = list(raw.get("authorities", ["authority-1", "authority-2", "authority-3"]))
    if not authorities:
        _fail("authorities", "at least one sealing authority required")

    stakeholders: list[StakeholderSpec] = []
    seen_ids: set[str] = set()
    for i, entry in enumerate(raw.get("stakeholders", [])):
        path = f"stakeholders[{i}]"
        sid = entry.get("id")
        if not sid or sid in seen_ids:
            _fail(path, "missing or duplicate id")
        seen_ids.add(sid)
        try:
            role = Role(entry["role"])
        except (KeyError, ValueError):
            _fail(f"{path}.role", f"unknown role {entry.get('role')!r}")
        stakes = entry.get("stakes", [])
        for j, stake in enumerate(stakes):
            if int(stake.get("amount", 0)) <= 0 or int(stake.get("lock_epochs", 0)) < 1:
                _fail(f"{path}.stakes[{j}]", "amount must be positive, lock_epochs >= 1")
        auditor_spec = entry.get("auditor")
        if auditor_spec is not None and role != Role.AUDITOR:
            _fail(f"{path}.auditor", "auditor block on a non-AUDITOR stakeholder")
        stakeholders.append(StakeholderSpec(
            id=sid, role=role, balance=int(entry.get("balance", 0)),
            stakes=[{"amount": int(s["amount"]), "lock_epochs": int(s["lock_epochs"])}
                    for s in stakes],
            auditor=auditor_spec,
        ))

    rules = [_parse_rule(r, f"rules[{i}]") for i, r in enumerate(raw.get("rules", []))]
    rule_metrics = {m for rule in rules for m in rule.metrics}

    systems: list[SystemSpec] = []
    system_ids: set[str] = set()
    for i, entry in enumerate(raw.get("ai_systems", [])):
        path = f"ai_systems[{i}]"
        sid = entry.get("id")
        if not sid or sid in system_ids:
            _fail(path, "missing or duplicate id")
        system_ids.add(sid)
        if entry.get("owner") not in seen_ids:
            _fail(f"{path}.owner", f"unknown stakeholder {entry.get('owner')!r}")
        try:
            tier = RiskTier(entry["risk_tier"])
        except (KeyError, ValueError):
            _fail(f"{path}.risk_tier", f"unknown tier {entry.get('risk_tier')!r}")
        if tier == RiskTier.UNACCEPTABLE:
            _fail(f"{path}.risk_tier", "unacceptable systems may not be registered")
        base_metrics = dict(entry.get("base_metrics", {}))
        missing = sorted(rule_metrics - base_metrics.keys())
        if missing:
            _fail(f"{path}.base_metrics", f"missing rule metrics: {', '.join(missing)}")
        public_key = None
        if "public_key" in entry:
            try:
                public_key = bytes.fromhex(entry["public_key"])
            except ValueError:
                _fail(f"{path}.public_key", "must be hex")
        systems.append(SystemSpec(
            id=sid, owner=entry["owner"], purpose=entry.get("purpose", sid),
            risk_tier=tier, exposure=as_fraction(entry.get("exposure", "1/2")),
            base_metrics=base_metrics, metadata=entry.get("metadata"),
            public_key=public_key,
        ))

    oracle_authorities = list(raw.get("oracle_authorities", []))
    oracle_feeds = []
    for i, feed in enumerate(raw.get("oracle_feeds", [])):
        path = f"oracle_feeds[{i}]"
        if feed.get("signer") not in oracle_authorities:
            _fail(f"{path}.signer", f"unknown oracle authority {feed.get('signer')!r}")
        epoch = feed.get("epoch")
        if not isinstance(epoch, int) or not 1 <= epoch <= epochs:
            _fail(f"{path}.epoch", "must be within 1..epochs")
        oracle_feeds.append(dict(feed))

    accreditors = list(raw.get("accreditors", []))
    for i, spec in enumerate(stakeholders):
        if spec.auditor is not None:
            if spec.auditor.get("body") not in accreditors:
                _fail(f"stakeholders[{i}].auditor.body",
                      f"unknown accreditor {spec.auditor.get('body')!r}")

    injected: list[dict] = []
    proposal_ids: set[str] = set()
    regulation_epochs: set[int] = set()
    for i, event in enumerate(raw.get("injected_events", [])):
        path = f"injected_events[{i}]"
        kind = event.get("kind")
        if kind not in INJECTION_KINDS:
            _fail(f"{path}.kind", f"unknown injection kind {kind!r}")
        epoch = event.get("epoch")
        if not isinstance(epoch, int) or not 1 <= epoch <= epochs:
            _fail(f"{path}.epoch", "must be within 1..epochs")
        if kind == "REGULATION_CHANGE":
            if epoch in regulation_epochs:
                _fail(f"{path}.epoch", "one REGULATION_CHANGE per epoch")
            regulation_epochs.add(epoch)
        if kind in ("VIOLATION", "INCIDENT") and event.get("system") not in system_ids:
            _fail(f"{path}.system", f"unknown system {event.get('system')!r}")
        if kind == "VIOLATION" and not isinstance(event.get("metrics"), dict):
            _fail(f"{path}.metrics", "VIOLATION needs a metrics override map")
        if kind == "INCIDENT":
            try:
                risk_mod.Severity(event.get("severity"))
            except ValueError:
                _fail(f"{path}.severity", f"unknown severity {event.get('severity')!r}")
        if kind == "COLLUSION":
            pair = event.get("pair", [])
            if len(pair) != 2 or any(p not in seen_ids for p in pair):
                _fail(f"{path}.pair", "needs two known stakeholder ids")
            if int(event.get("proposals", 0)) < 1:
                _fail(f"{path}.proposals", "needs a positive proposal count")
        if kind == "PROPOSAL":
            proposal = event.get("proposal", {})
            try:
                governance_mod.ProposalKind(proposal.get("kind"))
            except ValueError:
                _fail(f"{path}.proposal.kind", f"unknown kind {proposal.get('kind')!r}")
            explicit_id = proposal.get("id")
            if explicit_id is not None:
                if explicit_id in proposal_ids:
                    _fail(f"{path}.proposal.id", f"duplicate id {explicit_id!r}")
                proposal_ids.add(explicit_id)
            for j, vote in enumerate(proposal.get("votes", [])):
                if vote.get("voter") not in seen_ids:
                    _fail(f"{path}.proposal.votes[{j}].voter",
                          f"unknown stakeholder {vote.get('voter')!r}")
        injected.append(dict(event))

    return SimScenario(
        seed=int(raw.get("seed", 0)),
        epochs=epochs,
        config=config,
        authorities=authorities,
        oracle_authorities=oracle_authorities,
        accreditors=accreditors,
        stakeholders=stakeholders,
        ai_systems=systems,
        rules=rules,
        oracle_feeds=oracle_feeds,
        injected_events=injected,
        raw=raw,
    )


@dataclass
class SimResult:
    chain: Chain
    report: dict
    registry: DidRegistry
    tokens: TokenLedger
    governance: governance_mod.GovernanceState
    # Off-chain assessment store: full metric vectors live here, never on
    # the ledger (auditors receive them through disclosure).
    assessments: list[compliance_mod.Assessment]
    risk_profiles: dict[str, risk_mod.RiskProfile]

    @property
    def root_hash(self) -> str:
        return self.chain.head_hash.hex()


class Simulator:
    def __init__(self, scenario: SimScenario, *, seed: Optional[int] = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.config = scenario.config
        self._phase = PHASE_SETUP

    # --- streams ---

    def _stream(self, label: str) -> DeterministicStream:
        return DeterministicStream(self.seed, label)

    # --- setup ---

    def _setup(self) -> None:
        config = self.config
        scheme = get_scheme(config.signature_scheme)
        self._authority_keys = {
            authority_id: scheme.generate(
                sha256(b"authority" + authority_id.encode("utf-8")))
            for authority_id in self.scenario.authorities
        }
        self.chain = Chain(
            {aid: kp.public for aid, kp in self._authority_keys.items()},
            quorum=config.quorum,
            capacity=config.block_capacity,
            scheme=config.signature_scheme,
        )
        self.chain.phase_provider = lambda: self._phase

        scenario_digest = sha256(canonical_json_bytes(self.scenario.raw)).hex()
        self.tokens = TokenLedger.mint_genesis(
            config.pool_fractions,
            total_supply=config.total_supply,
            emission_divisor=config.emission_divisor,
            chain=self.chain,
            slash_fractions=config.slash_fractions,
            genesis_meta={
                "seed": self.seed,
                "epochs": self.scenario.epochs,
                "scenario_digest": scenario_digest,
                "config": config.to_snapshot(),
            },
        )

        self.rules = compliance_mod.RuleRegistry(self.chain)
        for rule in self.scenario.rules:
            self.rules.register_rule(rule, compliance_mod.GENESIS_AUTHORIZATION, epoch=0)

        self.governance = governance_mod.GovernanceState(
            self.chain, self.tokens, config.vote_weights())
        for spec in self.scenario.stakeholders:
            self.governance.add_stakeholder(
                governance_mod.Stakeholder(id=spec.id, role=spec.role))
            total_needed = spec.balance + sum(s["amount"] for s in spec.stakes)
            if total_needed:
                self.tokens.grant(config.funding_pool, spec.id, total_needed, epoch=0)
            for stake in spec.stakes:
                self.tokens.stake(spec.id, stake["amount"], stake["lock_epochs"], epoch=0)
        self.governance.sync_stakes()

        roles = {s.id: s.role for s in self.scenario.stakeholders}
        self.registry = DidRegistry(self.chain, ContentStore(), roles)

        self.audits = audit_mod.AuditRegistry(
            self.chain, self.rules, self.scenario.accreditors,
            intervals=config.audit_intervals,
            auditor_capacity=config.auditor_capacity,
        )
        for spec in self.scenario.stakeholders:
            if spec.auditor is not None:
                self.audits.accredit_auditor(
                    spec.id,
                    spec.auditor["body"],
                    [compliance_mod.RuleDomain(d) for d in spec.auditor["scopes"]],
                    int(spec.auditor.get("validity_epochs", self.scenario.epochs + 1)),
                    epoch=0,
                )

        self.oracles = compliance_mod.OracleBook(self.chain, self.scenario.oracle_authorities)
        self.risk = risk_mod.RiskEngine(
            self.chain, self.registry,
            weights=config.risk_weights, thresholds=config.tier_thresholds)
        self.incidents = risk_mod.IncidentLog(self.chain, self.registry)

        self._system_ids: dict[str, str] = {}  # scenario id -> did
        self._system_specs: dict[str, SystemSpec] = {}
        for spec in self.scenario.ai_systems:
            public_key = spec.public_key or sha256(
                b"system-key" + spec.id.encode("utf-8"))
            metadata_blobs = None
            if spec.metadata is not None:
                metadata_blobs = [canonical_json_bytes(spec.metadata)]
            did = self.registry.register_did(
                public_key, spec.purpose, spec.risk_tier, spec.owner,
                epoch=0, exposure=str(spec.exposure),
                metadata_blobs=metadata_blobs,
            )
            self._system_ids[spec.id] = did
            self._system_specs[did] = spec

        self._run_election(epoch=0)

        # Mutable run state.
        self._latest_assessment: dict[str, compliance_mod.Assessment] = {}
        self.assessment_log: list[compliance_mod.Assessment] = []
        self._aggregate_history: dict[str, list[float]] = {}
        self._audit_failed_prev: dict[str, bool] = {}
        self._pending_triggers: dict[str, set[str]] = {}
        self._carryover_triggers: dict[str, set[str]] = {}
        self._collusion_expiry: dict[str, int] = {}
        self._flagged_pairs: set[tuple[str, str]] = set()
        self._salt_stream = self._stream("assessment-salt")
        self._audit_stream = self._stream("audit-assign")
        self._vote_stream = self._stream("collusion-votes")
        self._proposal_seq = 0

    def _run_election(self, *, epoch: int) -> None:
        eligible = [
            s for s in self.governance.stakeholders.values()
            if governance_mod.raw_power(s, self.governance.weights) > 0
        ]
        seats = min(self.config.n_seats, len(eligible))
        if seats < 1:
            return
        try:
            self.governance.run_election(seats, epoch=epoch)
        except InsufficientCandidates:
            pass

    # --- phase bodies ---

    def _injections(self, epoch: int, kind: str) -> list[dict]:
        return [e for e in self.scenario.injected_events
                if e["epoch"] == epoch and e["kind"] == kind]

    def _add_trigger(self, did: str, reason: str, *, carryover: bool = False) -> None:
        bucket = self._carryover_triggers if carryover else self._pending_triggers
        bucket.setdefault(did, set()).add(reason)

    def _phase_ingest(self, epoch: int) -> dict[str, dict]:
        """Heartbeat, oracle feeds, injected events. Returns metric overrides."""
        self.chain.append(EventKind.HEARTBEAT, {"epoch": epoch},
                          actor="simulator", epoch=epoch)

        regulation_changed = False
        for feed_spec in self.scenario.oracle_feeds:
            if feed_spec["epoch"] != epoch:
                continue
            feed = compliance_mod.OracleFeed(
                feed_id=feed_spec["feed_id"], epoch=epoch,
                values=dict(feed_spec["values"]), signer=feed_spec["signer"])
            regulation_changed |= self.oracles.ingest(feed)
        for injection in self._injections(epoch, "REGULATION_CHANGE"):
            signer = (self.scenario.oracle_authorities[0]
                      if self.scenario.oracle_authorities else "regulator-oracle")
            if signer not in self.oracles.authorities:
                self.oracles.authorities.add(signer)
            feed = compliance_mod.OracleFeed(
                feed_id="regulation", epoch=epoch,
                values={compliance_mod.REGULATION_VERSION_KEY: injection.get("version", epoch)},
                signer=signer)
            regulation_changed |= self.oracles.ingest(feed)
        if regulation_changed:
            for did in sorted(self.registry.records):
                record = self.registry.records[did]
                if record.compliance_status in (
                        ComplianceStatus.COMPLIANT, ComplianceStatus.NONCOMPLIANT):
                    self.registry.system_set_status(
                        did, ComplianceStatus.UNDER_REVIEW,
                        epoch=epoch, actor="compliance-engine")

        for injection in self._injections(epoch, "INCIDENT"):
            did = self._system_ids[injection["system"]]
            self.incidents.raise_incident(
                did, risk_mod.Severity(injection["severity"]), epoch=epoch)

        overrides: dict[str, dict] = {}
        for injection in self._injections(epoch, "VIOLATION"):
            did = self._system_ids[injection["system"]]
            overrides.setdefault(did, {}).update(injection["metrics"])
            self._add_trigger(did, "violation")
        return overrides

    def _active_systems(self) -> list[str]:
        return [did for did in sorted(self.registry.records)
                if self.registry.records[did].compliance_status
                != ComplianceStatus.SUSPENDED]

    def _phase_compliance(self, epoch: int, overrides: Mapping[str, dict]) -> None:
        oracle_values = self.oracles.values_for(epoch)
        for did in self._active_systems():
            record = self.registry.records[did]
            spec = self._system_specs[did]
            metrics = dict(spec.base_metrics)
            metrics.update(oracle_values)
            metrics.update(overrides.get(did, {}))
            # Oracle feeds may carry market values outside the rule metric
            # set; assessments commit to the rule-relevant vector only.
            metrics = {k: v for k, v in metrics.items() if k in spec.base_metrics}
            salt = self._salt_stream.bytes_(32)
            assessment = compliance_mod.evaluate(
                record, metrics, epoch, self.rules, self.chain, salt=salt)
            self._latest_assessment[did] = assessment
            self.assessment_log.append(assessment)
            self._aggregate_history.setdefault(did, []).append(
                float(assessment.aggregate_score))
            if not assessment.compliant:
                self._add_trigger(did, "mitigation")
            elif record.compliance_status == ComplianceStatus.UNDER_REVIEW:
                # A clean conformity assessment clears the review state;
                # NONCOMPLIANT needs a passing audit, not just a self-check.
                self.registry.system_set_status(
                    did, ComplianceStatus.COMPLIANT,
                    epoch=epoch, actor="compliance-engine")

    def _phase_risk(self, epoch: int) -> None:
        for incident in self.incidents.incidents:
            if incident.state == risk_mod.IncidentState.POSTMORTEM_FILED:
                continue
            last_epoch = incident.transitions[-1][1]
            if last_epoch < epoch:
                self.incidents.advance_incident(incident, epoch=epoch)
        for did in self._active_systems():
            assessment = self._latest_assessment.get(did)
            if assessment is None or assessment.epoch != epoch:
                continue
            spec = self._system_specs[did]
            self.risk.update(
                did, epoch, assessment.aggregate_score,
                audit_failed=self._audit_failed_prev.get(did, False),
                incident_count=self.incidents.open_count(did),
                exposure=spec.exposure,
            )
            forecast, flagged = risk_mod.forecast_compliance(
                self._aggregate_history[did],
                self.config.ewma_alpha, floor=self.config.forecast_floor)
            if flagged:
                self._add_trigger(did, "forecast")

    def _phase_audit(self, epoch: int) -> list[audit_mod.AuditRecord]:
        triggers: dict[str, str] = {}
        merged: dict[str, set[str]] = {}
        for source in (self._carryover_triggers, self._pending_triggers):
            for did, reasons in source.items():
                merged.setdefault(did, set()).update(reasons)
        for did, reasons in merged.items():
            for reason in _TRIGGER_PRIORITY:
                if reason in reasons:
                    triggers[did] = reason
                    break
        self._carryover_triggers = {}
        self._pending_triggers = {}

        assignments = self.audits.schedule_audits(
            epoch, self.registry.records,
            triggers=triggers, stream=self._audit_stream)
        records = []
        for assignment in assignments:
            assessment = self._latest_assessment.get(assignment.system_did)
            if assessment is None:
                continue
            record = self.audits.perform_audit(
                assignment.auditor_id,
                self.registry.records[assignment.system_did],
                assessment.metric_values,
                assessment.salt,
                assessment.commitment,
                epoch=epoch,
                trigger=assignment.trigger,
            )
            records.append(record)
        return records

    def _phase_penalties(self, epoch: int, audit_records: list[audit_mod.AuditRecord]) -> None:
        failed_now: dict[str, bool] = {}
        for record in audit_records:
            did = record.system_did
            owner = self.registry.records[did].owner
            if record.outcome == audit_mod.AuditOutcome.FAIL:
                reason = (SlashReason.COLLUSION_CONFIRMED
                          if record.trigger == "collusion" else SlashReason.AUDIT_FAIL)
                self.tokens.slash(owner, reason, epoch=epoch)
                if (self.registry.records[did].compliance_status
                        != ComplianceStatus.SUSPENDED):
                    self.registry.system_set_status(
                        did, ComplianceStatus.NONCOMPLIANT,
                        epoch=epoch, actor="audit-engine")
                failed_now[did] = True
            elif record.outcome == audit_mod.AuditOutcome.INCONCLUSIVE:
                self.tokens.slash(owner, SlashReason.EVIDENCE_FORGED, epoch=epoch)
                failed_now[did] = True
            else:
                if self.registry.records[did].compliance_status in (
                        ComplianceStatus.UNDER_REVIEW, ComplianceStatus.NONCOMPLIANT):
                    self.registry.system_set_status(
                        did, ComplianceStatus.COMPLIANT,
                        epoch=epoch, actor="audit-engine")
        self.governance.sync_stakes()
        self._audit_failed_prev = failed_now

    def _next_proposal_id(self, prefix: str, epoch: int) -> str:
        self._proposal_seq += 1
        return f"{prefix}-{epoch}-{self._proposal_seq:03d}"

    def _phase_governance(self, epoch: int) -> None:
        tallied: list[str] = []

        for injection in self._injections(epoch, "PROPOSAL"):
            spec = injection["proposal"]
            proposal_id = spec.get("id") or self._next_proposal_id("prop", epoch)
            self.governance.submit_proposal(
                proposal_id, governance_mod.ProposalKind(spec["kind"]),
                spec.get("payload", {}),
                mode=governance_mod.VoteMode(spec.get("mode", "LINEAR")),
                epoch=epoch)
            for vote in spec.get("votes", []):
                self.governance.cast_vote(
                    vote["voter"], proposal_id,
                    governance_mod.VoteDirection(vote["direction"]),
                    magnitude=int(vote.get("magnitude", 1)),
                    epoch=epoch)
            tallied.append(proposal_id)

        for injection in self._injections(epoch, "COLLUSION"):
            pair = list(injection["pair"])
            for _ in range(int(injection["proposals"])):
                proposal_id = self._next_proposal_id("collusion", epoch)
                self.governance.submit_proposal(
                    proposal_id, governance_mod.ProposalKind.ROUTINE,
                    {"scripted": "coordinated-voting"}, epoch=epoch)
                direction = (governance_mod.VoteDirection.FOR
                             if self._vote_stream.randbelow(2) == 0
                             else governance_mod.VoteDirection.AGAINST)
                for voter in pair:
                    self.governance.cast_vote(voter, proposal_id, direction, epoch=epoch)
                tallied.append(proposal_id)

        for proposal_id in tallied:
            status = self.governance.tally(proposal_id, epoch=epoch)
            proposal = self.governance.proposals[proposal_id]
            if status != governance_mod.ProposalStatus.PASSED:
                continue
            if proposal.kind == governance_mod.ProposalKind.WEIGHT_ADJUSTMENT:
                self.governance.adjust_weights(proposal, epoch=epoch)
            elif proposal.kind == governance_mod.ProposalKind.RULE_UPDATE:
                rule = _parse_rule(proposal.payload["rule"], f"proposal {proposal_id}")
                self.rules.register_rule(rule, proposal, epoch=epoch)

        flagged = governance_mod.detect_collusion(
            self.governance.vote_histories(),
            self.config.collusion_min_common,
            self.config.collusion_agreement,
        )
        for pair in sorted(flagged - self._flagged_pairs):
            self._flagged_pairs.add(pair)
            a, b = pair
            shared = (self.governance.stakeholders[a].vote_history.keys()
                      & self.governance.stakeholders[b].vote_history.keys())
            self.chain.append(
                EventKind.COLLUSION_FLAGGED,
                {"pair": [a, b], "shared": len(shared),
                 "penalty": str(self.config.collusion_penalty),
                 "expiry_epoch": epoch + 1},
                actor="governance", epoch=epoch)
            for member in pair:
                self.governance.apply_collusion_penalty(
                    member, self.config.collusion_penalty)
                self._collusion_expiry[member] = epoch + 1
                for did, spec in sorted(self._system_specs.items()):
                    if spec.owner == member:
                        self._add_trigger(did, "collusion", carryover=True)

    def _phase_rewards(self, epoch: int) -> None:
        factors: dict[str, Fraction] = {}
        owned: dict[str, list[Fraction]] = {}
        for did, assessment in self._latest_assessment.items():
            owner = self.registry.records[did].owner
            owned.setdefault(owner, []).append(assessment.aggregate_score)
        for owner, scores in owned.items():
            factors[owner] = sum(scores, Fraction(0)) / len(scores)
        self.tokens.distribute_rewards(epoch, factors)

    # --- main loop ---

    def run(self) -> SimResult:
        self._phase = PHASE_SETUP
        self._setup()

        for epoch in range(1, self.scenario.epochs + 1):
            self.governance.apply_staged_weights()

            self._phase = PHASE_INGEST
            overrides = self._phase_ingest(epoch)

            self._phase = PHASE_COMPLIANCE
            self._phase_compliance(epoch, overrides)

            self._phase = PHASE_RISK
            self._phase_risk(epoch)

            self._phase = PHASE_AUDIT
            audit_records = self._phase_audit(epoch)

            self._phase = PHASE_PENALTIES
            self._phase_penalties(epoch, audit_records)

            self._phase = PHASE_GOVERNANCE
            self._phase_governance(epoch)

            self._phase = PHASE_ELECTIONS
            if epoch % self.config.election_period == 0:
                self._run_election(epoch=epoch)

            self._phase = PHASE_REWARDS
            self._phase_rewards(epoch)

            self._phase = PHASE_SEALING
            self.chain.seal_all(
                {aid: kp.private for aid, kp in self._authority_keys.items()})

            for member, expiry in list(self._collusion_expiry.items()):
                if expiry <= epoch:
                    self.governance.clear_collusion_penalty(member)
                    del self._collusion_expiry[member]

        report = build_report(self.chain.blocks)
        return SimResult(
            chain=self.chain, report=report, registry=self.registry,
            tokens=self.tokens, governance=self.governance,
            assessments=self.assessment_log,
            risk_profiles=self.risk.profiles)


def run_scenario(
    source: str | Path | Mapping[str, Any],
    *,
    seed: Optional[int] = None,
) -> SimResult:
    scenario = load_scenario(source)
    return Simulator(scenario, seed=seed).run()


def check_phase_discipline(blocks) -> list[str]:
    """Scan a sealed chain for events outside their designated phases."""
    problems = []
    for block in blocks:
        for event in block.events:
            phase = event.body().get("phase")
            allowed = PHASE_OF_KIND.get(event.kind)
            if phase is None or allowed is None:
                problems.append(f"event {event.event_id}: missing phase stamp")
            elif phase not in allowed:
                problems.append(
                    f"event {event.event_id} ({event.kind.value}) in phase {phase}, "
                    f"allowed {sorted(allowed)}")
    return problems


def verify_run(chain_path: str | Path, report_path: Optional[str | Path] = None):
    """Chain integrity plus report/chain consistency.

    Returns (verification, report_matches) where report_matches is None when
    no report was supplied or found next to the chain file.
    """
    from .ledger import load_chain

    chain = load_chain(chain_path)
    verification = verify_chain(
        chain.blocks, chain.authorities, chain.quorum, chain.scheme_name)
    report_matches: Optional[bool] = None
    if report_path is None:
        sibling = Path(chain_path).parent / "report.json"
        report_path = sibling if sibling.exists() else None
    if report_path is not None and verification.ok:
        stored = load_report(report_path)
        report_matches = stored == build_report(chain.blocks)
    return verification, report_matches
