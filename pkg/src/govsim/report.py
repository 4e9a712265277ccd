"""Report building as a pure fold over sealed chain events.

Everything in a run report is reconstructed from event payloads alone: the
token position is replayed arithmetically, DID records are rebuilt from
registration/update events, and per-epoch risk scores are recomputed from
on-chain assessment/audit/incident data plus the config snapshot embedded
in the genesis event. The simulator itself reports via this fold, and
``verify`` re-runs it against the emitted report file.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .encoding import as_fraction, canonical_json_bytes, sha256
from .errors import IoError, UnsupportedFormat
from .ledger import Block, EventKind
from .risk import RiskWeights, compute_risk_score


class _TokenReplica:
    """Integer-only replay of token movement events."""

    def __init__(self):
        self.total_supply = 0
        self.pools: dict[str, int] = {}
        self.balances: dict[str, int] = {}
        self.stakes: dict[str, list[dict]] = {}
        self.burned = 0

    def apply_transfer(self, body: dict) -> None:
        op = body.get("op")
        if op == "mint_genesis":
            self.total_supply = body["total_supply"]
            self.pools = dict(body["pools"])
        elif op == "grant":
            self.pools[body["pool"]] -= body["amount"]
            self._credit(body["to"], body["amount"])
        elif op == "transfer":
            self.balances[body["from"]] -= body["amount"]
            self._credit(body["to"], body["amount"])
        elif op == "pool_charge":
            self.balances[body["from"]] -= body["amount"]
            self.pools[body["pool"]] += body["amount"]
        elif op == "reward":
            self.pools["REWARDS"] -= body["amount"]
            self._credit(body["to"], body["amount"])

    def _credit(self, holder: str, amount: int) -> None:
        self.balances[holder] = self.balances.get(holder, 0) + amount

    def apply_stake(self, body: dict) -> None:
        holder = body["holder"]
        entries = self.stakes.setdefault(holder, [])
        if body["op"] == "stake":
            self.balances[holder] -= body["amount"]
            entries.append({
                "amount": body["amount"],
                "lock_start_epoch": body["lock_start_epoch"],
                "lock_epochs": body["lock_epochs"],
            })
        else:  # unstake
            for i, entry in enumerate(entries):
                if (entry["amount"] == body["amount"]
                        and entry["lock_start_epoch"] == body["lock_start_epoch"]
                        and entry["lock_epochs"] == body["lock_epochs"]):
                    entries.pop(i)
                    break
            self._credit(holder, body["amount"])

    def apply_slash(self, body: dict) -> None:
        holder = body["holder"]
        remaining = body["burned"]
        entries = self.stakes.get(holder, [])
        entries.sort(key=lambda e: (e["lock_start_epoch"], e["lock_epochs"]))
        while remaining > 0 and entries:
            take = min(entries[0]["amount"], remaining)
            entries[0]["amount"] -= take
            remaining -= take
            if entries[0]["amount"] == 0:
                entries.pop(0)
        self.burned += body["burned"]

    def allocated(self) -> int:
        return (
            sum(self.pools.values())
            + sum(self.balances.values())
            + sum(e["amount"] for entries in self.stakes.values() for e in entries)
            + self.burned
        )

    def snapshot(self) -> dict:
        return {
            "total_supply": self.total_supply,
            "pools": dict(self.pools),
            "balances": dict(sorted(self.balances.items())),
            "stakes": {h: list(es) for h, es in sorted(self.stakes.items()) if es},
            "burned": self.burned,
        }


class ChainFold:
    """Replays every event into queryable state."""

    def __init__(self, blocks: Sequence[Block]):
        self.blocks = blocks
        self.genesis_meta: dict = {}
        self.tokens = _TokenReplica()
        self.dids: dict[str, dict] = {}
        self.did_events: dict[str, list[dict]] = defaultdict(list)
        self.assessments: dict[int, dict[str, dict]] = defaultdict(dict)
        self.audits: list[dict] = []
        self.incidents: dict[str, dict] = {}
        self.proposals: dict[str, dict] = {}
        self.elections: list[dict] = []
        self.collusion_flags: list[dict] = []
        self.weight_adjustments: list[dict] = []
        self.reclassifications: list[dict] = []
        self.access_logged = 0
        self.access_denied = 0
        self.per_epoch: dict[int, dict[str, int]] = defaultdict(dict)
        self.max_epoch = 0
        self._replay()

    def _replay(self) -> None:
        for block in self.blocks:
            for event in block.events:
                self._apply(event.kind, event.epoch, event.body())

    def _apply(self, kind: EventKind, epoch: int, body: dict) -> None:
        counts = self.per_epoch[epoch]
        counts[kind.value] = counts.get(kind.value, 0) + 1
        self.max_epoch = max(self.max_epoch, epoch)

        if kind == EventKind.TOKENS_TRANSFERRED:
            if body.get("op") == "mint_genesis":
                self.genesis_meta = body
            self.tokens.apply_transfer(body)
        elif kind == EventKind.STAKE_CHANGED:
            self.tokens.apply_stake(body)
        elif kind == EventKind.SLASH_APPLIED:
            self.tokens.apply_slash(body)
        elif kind == EventKind.DID_REGISTERED:
            self.dids[body["did"]] = {
                "did": body["did"],
                "owner": body["owner"],
                "purpose": body["purpose"],
                "risk_tier": body["risk_tier"],
                "compliance_status": "UNDER_REVIEW",
                "version": body["version"],
                "exposure": body.get("exposure", "1/2"),
                "metadata_refs": body.get("metadata_refs", []),
            }
            self.did_events[body["did"]].append({"epoch": epoch, **body})
        elif kind == EventKind.DID_UPDATED:
            record = self.dids.get(body["did"])
            if record is not None:
                record["version"] = body["version"]
                change = body.get("change", {})
                if "status" in change:
                    record["compliance_status"] = change["status"]
                if "risk_tier" in change:
                    record["risk_tier"] = change["risk_tier"]
                if "purpose" in change:
                    record["purpose"] = change["purpose"]
                if "metadata_ref" in change:
                    record["metadata_refs"].append(change["metadata_ref"])
            self.did_events[body["did"]].append({"epoch": epoch, **body})
        elif kind == EventKind.ACCESS_LOGGED:
            self.access_logged += 1
            if not body.get("allowed", True):
                self.access_denied += 1
        elif kind == EventKind.ASSESSMENT_RECORDED:
            self.assessments[epoch][body["did"]] = {
                "score": body["score"],
                "tier": body["tier"],
                "compliant": body["compliant"],
            }
        elif kind == EventKind.AUDIT_RECORDED:
            self.audits.append({"epoch": epoch, **body})
        elif kind == EventKind.INCIDENT_RAISED:
            self.incidents[body["incident_id"]] = {
                "incident_id": body["incident_id"],
                "did": body["did"],
                "severity": body["severity"],
                "transitions": [["RAISED", epoch]],
            }
        elif kind == EventKind.INCIDENT_ADVANCED:
            self.incidents[body["incident_id"]]["transitions"].append(
                [body["state"], epoch]
            )
        elif kind == EventKind.RISK_RECLASSIFIED:
            self.reclassifications.append({"epoch": epoch, **body})
        elif kind == EventKind.PROPOSAL_SUBMITTED:
            self.proposals[body["proposal_id"]] = {
                "proposal_id": body["proposal_id"],
                "kind": body["kind"],
                "mode": body.get("mode", "LINEAR"),
                "epoch": epoch,
                "status": "OPEN",
                "votes": 0,
            }
        elif kind == EventKind.VOTE_CAST:
            proposal = self.proposals.get(body["proposal_id"])
            if proposal is not None:
                proposal["votes"] += 1
                proposal.setdefault("vote_events", []).append({
                    "voter": body["voter"], "direction": body["direction"],
                    "magnitude": body["magnitude"], "epoch": epoch,
                })
        elif kind == EventKind.PROPOSAL_RESOLVED:
            proposal = self.proposals.setdefault(
                body["proposal_id"],
                {"proposal_id": body["proposal_id"], "kind": body.get("kind", ""),
                 "epoch": epoch, "votes": 0},
            )
            proposal["status"] = body["status"]
            proposal["power_for"] = body["power_for"]
            proposal["power_against"] = body["power_against"]
            proposal["threshold"] = body["threshold"]
        elif kind == EventKind.DELEGATE_ELECTED:
            self.elections.append({"epoch": epoch, "delegates": body["delegates"]})
        elif kind == EventKind.COLLUSION_FLAGGED:
            self.collusion_flags.append({"epoch": epoch, **body})
        elif kind == EventKind.WEIGHTS_ADJUSTED:
            self.weight_adjustments.append({"epoch": epoch, **body})

    # --- derived views ---

    def incident_open_at(self, did: str, epoch: int) -> int:
        open_count = 0
        for incident in self.incidents.values():
            if incident["did"] != did:
                continue
            state = None
            for name, at_epoch in incident["transitions"]:
                if at_epoch <= epoch:
                    state = name
            if state in ("RAISED", "CONTAINED"):
                open_count += 1
        return open_count

    def audit_failed_at(self, did: str, epoch: int) -> bool:
        return any(
            a["did"] == did and a["epoch"] == epoch and a["outcome"] in ("FAIL", "INCONCLUSIVE")
            for a in self.audits
        )

    def risk_weights(self) -> RiskWeights:
        config = self.genesis_meta.get("config", {})
        raw = config.get("risk_weights")
        if not raw:
            return RiskWeights()
        return RiskWeights(
            noncompliance=as_fraction(raw["noncompliance"]),
            audit_failure=as_fraction(raw["audit_failure"]),
            incidents=as_fraction(raw["incidents"]),
            exposure=as_fraction(raw["exposure"]),
        )

    def score_series(self) -> dict[str, list[list]]:
        """Recompute each system's per-epoch score from on-chain inputs."""
        weights = self.risk_weights()
        series: dict[str, list[list]] = defaultdict(list)
        for epoch in sorted(self.assessments):
            for did in sorted(self.assessments[epoch]):
                record = self.dids.get(did)
                if record is None:
                    continue
                entry = self.assessments[epoch][did]
                score = compute_risk_score(
                    as_fraction(entry["score"]),
                    self.audit_failed_at(did, epoch - 1),
                    self.incident_open_at(did, epoch),
                    as_fraction(record["exposure"]),
                    weights,
                )
                series[did].append([epoch, str(score)])
        return dict(series)


def build_report(blocks: Sequence[Block]) -> dict:
    """The full run report as a deterministic JSON-able dict."""
    fold = ChainFold(blocks)

    epochs = fold.genesis_meta.get("epochs", fold.max_epoch)
    per_epoch = []
    for epoch in range(0, fold.max_epoch + 1):
        counts = fold.per_epoch.get(epoch, {})
        per_epoch.append({
            "epoch": epoch,
            "events": sum(counts.values()),
            "by_kind": dict(sorted(counts.items())),
        })

    by_tier: dict[str, dict[str, int]] = defaultdict(lambda: {"assessments": 0, "compliant": 0})
    for epoch_map in fold.assessments.values():
        for entry in epoch_map.values():
            bucket = by_tier[entry["tier"]]
            bucket["assessments"] += 1
            bucket["compliant"] += 1 if entry["compliant"] else 0
    compliance_rates = {
        tier: {
            "assessments": bucket["assessments"],
            "compliant": bucket["compliant"],
            "rate": str(Fraction(bucket["compliant"], bucket["assessments"]))
            if bucket["assessments"] else "0",
        }
        for tier, bucket in sorted(by_tier.items())
    }

    audit_outcomes = {"PASS": 0, "FAIL": 0, "INCONCLUSIVE": 0}
    audits_by_trigger: dict[str, int] = defaultdict(int)
    for audit in fold.audits:
        audit_outcomes[audit["outcome"]] += 1
        audits_by_trigger[audit["trigger"]] += 1

    snapshot = fold.tokens.snapshot()
    conserved = fold.tokens.allocated() == fold.tokens.total_supply

    return {
        "root_hash": blocks[-1].block_hash.hex() if blocks else "",
        "blocks": len(blocks),
        "epochs": epochs,
        "events_total": sum(len(b.events) for b in blocks),
        "per_epoch": per_epoch,
        "compliance": {"by_tier": compliance_rates},
        "audits": {
            "total": len(fold.audits),
            "by_outcome": audit_outcomes,
            "by_trigger": dict(sorted(audits_by_trigger.items())),
        },
        "tokens": {
            "snapshot": snapshot,
            "conserved": conserved,
            "checksum": sha256(canonical_json_bytes(snapshot)).hex(),
        },
        "risk_metrics": {
            "scores": fold.score_series(),
            "reclassifications": fold.reclassifications,
            "incidents": [fold.incidents[k] for k in sorted(fold.incidents)],
        },
        "governance": {
            "proposals": [fold.proposals[k] for k in sorted(fold.proposals)],
            "elections": fold.elections,
            "collusion_flags": fold.collusion_flags,
            "weight_adjustments": fold.weight_adjustments,
        },
        "access": {"logged": fold.access_logged, "denied": fold.access_denied},
    }


# --- export ---

def report_json_bytes(report: dict) -> bytes:
    return (json.dumps(report, indent=2, sort_keys=True) + "\n").encode("utf-8")


def report_csv_bytes(report: dict) -> bytes:
    """Per-epoch series flattened; one row per simulated epoch (setup excluded)."""
    kinds = sorted(k.value for k in EventKind)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["epoch", "events", *kinds])
    for row in report["per_epoch"]:
        if row["epoch"] == 0:
            continue
        writer.writerow([
            row["epoch"], row["events"],
            *(row["by_kind"].get(kind, 0) for kind in kinds),
        ])
    return buffer.getvalue().encode("utf-8")


def export_report(report: dict, path: str | Path, fmt: str = "json") -> Path:
    path = Path(path)
    if fmt == "json":
        path.write_bytes(report_json_bytes(report))
    elif fmt == "csv":
        path.write_bytes(report_csv_bytes(report))
    else:
        raise UnsupportedFormat(f"unknown export format: {fmt!r}")
    return path


def load_report(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read report: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoError(f"report is not valid JSON: {exc}") from exc
