"""Decentralized-identity registry for AI systems.

DIDs are derived from public keys (same key, same DID), records hold only
content-addressed references to off-chain metadata, and every read or write
through the RBAC-guarded paths leaves an ACCESS_LOGGED event. The content
store exposes the store/resolve-by-hash interface an IPFS-like backend
would, so it can be swapped without touching the registry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

from .encoding import canonical_json_bytes, sha256
from .errors import (
    AccessDenied,
    DuplicateIdentity,
    InvalidBlob,
    NotFound,
    ProhibitedSystem,
    TooLarge,
    UnknownIdentity,
    UnknownStakeholder,
)
from .ledger import Chain, EventKind

DID_PREFIX = "did:govsim:"
DID_HEX_CHARS = 32
MAX_BLOB_BYTES = 1 << 20  # 1 MiB


class Role(str, Enum):
    REGULATOR = "REGULATOR"
    BANK = "BANK"
    FINTECH = "FINTECH"
    AUDITOR = "AUDITOR"
    DEVELOPER = "DEVELOPER"


class RiskTier(str, Enum):
    UNACCEPTABLE = "UNACCEPTABLE"
    HIGH = "HIGH"
    LIMITED = "LIMITED"
    MINIMAL = "MINIMAL"


class ComplianceStatus(str, Enum):
    COMPLIANT = "COMPLIANT"
    NONCOMPLIANT = "NONCOMPLIANT"
    UNDER_REVIEW = "UNDER_REVIEW"
    SUSPENDED = "SUSPENDED"


class Action(str, Enum):
    VIEW = "VIEW"
    MODIFY = "MODIFY"
    AUDIT = "AUDIT"
    RECLASSIFY = "RECLASSIFY"


# Default role/action policy. Total: every (role, action) pair present.
# Ownership is a second gate on top of this table: BANK and FINTECH may
# MODIFY only records they own, DEVELOPER may VIEW only records they own.
DEFAULT_POLICY: dict[tuple[Role, Action], bool] = {}
for _role in Role:
    for _action in Action:
        DEFAULT_POLICY[(_role, _action)] = False
for _action in Action:
    DEFAULT_POLICY[(Role.REGULATOR, _action)] = True
DEFAULT_POLICY[(Role.AUDITOR, Action.VIEW)] = True
DEFAULT_POLICY[(Role.AUDITOR, Action.AUDIT)] = True
DEFAULT_POLICY[(Role.BANK, Action.VIEW)] = True
DEFAULT_POLICY[(Role.BANK, Action.MODIFY)] = True
DEFAULT_POLICY[(Role.FINTECH, Action.VIEW)] = True
DEFAULT_POLICY[(Role.FINTECH, Action.MODIFY)] = True
DEFAULT_POLICY[(Role.DEVELOPER, Action.VIEW)] = True

# Roles whose VIEW/MODIFY rights are limited to records they own.
OWNER_SCOPED: dict[Role, frozenset[Action]] = {
    Role.BANK: frozenset({Action.MODIFY}),
    Role.FINTECH: frozenset({Action.MODIFY}),
    Role.DEVELOPER: frozenset({Action.VIEW}),
}


def check_access(
    role: Role,
    action: Action,
    policy: Optional[Mapping[tuple[Role, Action], bool]] = None,
) -> bool:
    """Pure lookup in the total (role, action) policy table."""
    table = DEFAULT_POLICY if policy is None else policy
    return table[(role, action)]


def derive_did(public_key: bytes) -> str:
    """Deterministic DID: prefix plus the truncated key digest."""
    return DID_PREFIX + sha256(public_key).hex()[:DID_HEX_CHARS]


class ContentStore:
    """In-process content-addressed blob store (address = SHA-256 of blob)."""

    def __init__(self, max_bytes: int = MAX_BLOB_BYTES):
        self.max_bytes = max_bytes
        self._blobs: dict[bytes, bytes] = {}

    def store(self, blob: bytes) -> bytes:
        if not blob:
            raise InvalidBlob("empty blob")
        if len(blob) > self.max_bytes:
            raise TooLarge(f"blob of {len(blob)} bytes exceeds {self.max_bytes}")
        address = sha256(blob)
        self._blobs[address] = blob
        return address

    def resolve(self, address: bytes) -> bytes:
        try:
            return self._blobs[address]
        except KeyError:
            raise NotFound(f"no blob at {address.hex()}") from None

    def __len__(self) -> int:
        return len(self._blobs)

    def __contains__(self, address: bytes) -> bool:
        return address in self._blobs


@dataclass
class AISystemRecord:
    did: str
    public_key: bytes
    risk_tier: RiskTier
    compliance_status: ComplianceStatus
    purpose: str
    owner: str
    version: int = 1
    metadata_refs: list[bytes] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "did": self.did,
            "risk_tier": self.risk_tier.value,
            "compliance_status": self.compliance_status.value,
            "purpose": self.purpose,
            "owner": self.owner,
            "version": self.version,
            "metadata_refs": [ref.hex() for ref in self.metadata_refs],
        }


class DidRegistry:
    """Registry of AI-system records keyed by DID.

    ``roles`` is a live view mapping stakeholder id to role, used both for
    owner existence checks and to resolve an actor's role on guarded paths.
    """

    def __init__(
        self,
        chain: Chain,
        store: ContentStore,
        roles: Mapping[str, Role],
        policy: Optional[Mapping[tuple[Role, Action], bool]] = None,
    ):
        self.chain = chain
        self.store = store
        self.roles = roles
        self.policy = dict(DEFAULT_POLICY if policy is None else policy)
        self.records: dict[str, AISystemRecord] = {}
        self._keys_seen: set[bytes] = set()

    # --- registration ---

    def register_did(
        self,
        public_key: bytes,
        purpose: str,
        risk_tier: RiskTier,
        owner: str,
        *,
        epoch: int = 0,
        exposure: str = "1/2",
        metadata_blobs: Optional[list[bytes]] = None,
    ) -> str:
        if public_key in self._keys_seen:
            raise DuplicateIdentity("public key already registered")
        if risk_tier == RiskTier.UNACCEPTABLE:
            raise ProhibitedSystem("unacceptable-tier systems may not be registered")
        if owner not in self.roles:
            raise UnknownStakeholder(f"unknown owner: {owner}")
        did = derive_did(public_key)
        if did in self.records:
            raise DuplicateIdentity(f"did collision: {did}")
        record = AISystemRecord(
            did=did,
            public_key=public_key,
            risk_tier=risk_tier,
            compliance_status=ComplianceStatus.UNDER_REVIEW,
            purpose=purpose,
            owner=owner,
        )
        for blob in metadata_blobs or []:
            record.metadata_refs.append(self.store.store(blob))
        self.records[did] = record
        self._keys_seen.add(public_key)
        self.chain.append(
            EventKind.DID_REGISTERED,
            {
                "did": did,
                "owner": owner,
                "purpose": purpose,
                "risk_tier": risk_tier.value,
                "version": 1,
                "exposure": exposure,
                "metadata_refs": [ref.hex() for ref in record.metadata_refs],
            },
            actor=owner,
            epoch=epoch,
        )
        return did

    # --- guarded access ---

    def _actor_role(self, actor: str) -> Role:
        try:
            return self.roles[actor]
        except KeyError:
            raise UnknownStakeholder(f"unknown actor: {actor}") from None

    def _log_access(self, did: str, actor: str, role: Role, action: Action,
                    allowed: bool, epoch: int) -> None:
        self.chain.append(
            EventKind.ACCESS_LOGGED,
            {
                "did": did,
                "actor": actor,
                "role": role.value,
                "action": action.value,
                "allowed": allowed,
            },
            actor=actor,
            epoch=epoch,
        )

    def _authorize(self, record: AISystemRecord, actor: str, action: Action,
                   epoch: int) -> Role:
        """Policy check plus ownership rule; logs the attempt either way."""
        role = self._actor_role(actor)
        allowed = check_access(role, action, self.policy)
        if allowed and action in OWNER_SCOPED.get(role, frozenset()):
            allowed = record.owner == actor
        self._log_access(record.did, actor, role, action, allowed, epoch)
        if not allowed:
            raise AccessDenied(f"{role.value} may not {action.value} {record.did}")
        return role

    def get(self, did: str) -> AISystemRecord:
        """Unlogged internal lookup (module plumbing, not an RBAC path)."""
        try:
            return self.records[did]
        except KeyError:
            raise UnknownIdentity(f"unknown did: {did}") from None

    def view_record(self, did: str, actor: str, *, epoch: int = 0) -> AISystemRecord:
        record = self.get(did)
        self._authorize(record, actor, Action.VIEW, epoch)
        return record

    def update_did(
        self,
        did: str,
        actor: str,
        *,
        status: Optional[ComplianceStatus] = None,
        metadata_ref: Optional[bytes] = None,
        purpose: Optional[str] = None,
        epoch: int = 0,
    ) -> int:
        """Apply exactly one change; returns the new version."""
        record = self.get(did)
        changes = [c for c in (status, metadata_ref, purpose) if c is not None]
        if len(changes) != 1:
            raise InvalidBlob("exactly one of status/metadata_ref/purpose required")
        self._authorize(record, actor, Action.MODIFY, epoch)
        if status is not None:
            record.compliance_status = status
            change = {"status": status.value}
        elif metadata_ref is not None:
            if metadata_ref not in self.store:
                raise NotFound("metadata_ref does not resolve in the store")
            record.metadata_refs.append(metadata_ref)
            change = {"metadata_ref": metadata_ref.hex()}
        else:
            record.purpose = purpose
            change = {"purpose": purpose}
        record.version += 1
        self.chain.append(
            EventKind.DID_UPDATED,
            {"did": did, "version": record.version, "change": change},
            actor=actor,
            epoch=epoch,
        )
        return record.version

    def reclassify(self, did: str, new_tier: RiskTier, actor: str, *, epoch: int = 0) -> int:
        """RBAC-guarded tier change (requires RECLASSIFY)."""
        record = self.get(did)
        self._authorize(record, actor, Action.RECLASSIFY, epoch)
        return self._apply_tier(record, new_tier, actor, epoch)

    def system_reclassify(self, did: str, new_tier: RiskTier, *, epoch: int = 0,
                          actor: str = "risk-engine") -> int:
        """Automated write-through from the risk module (no RBAC path)."""
        record = self.get(did)
        return self._apply_tier(record, new_tier, actor, epoch)

    def _apply_tier(self, record: AISystemRecord, new_tier: RiskTier,
                    actor: str, epoch: int) -> int:
        record.risk_tier = new_tier
        change: dict = {"risk_tier": new_tier.value}
        if new_tier == RiskTier.UNACCEPTABLE:
            record.compliance_status = ComplianceStatus.SUSPENDED
            change["status"] = ComplianceStatus.SUSPENDED.value
        record.version += 1
        self.chain.append(
            EventKind.DID_UPDATED,
            {"did": record.did, "version": record.version, "change": change},
            actor=actor,
            epoch=epoch,
        )
        return record.version

    def system_set_status(self, did: str, status: ComplianceStatus, *, epoch: int = 0,
                          actor: str = "compliance-engine") -> int:
        """Automated status write (regulation re-checks, audit outcomes)."""
        record = self.get(did)
        record.compliance_status = status
        record.version += 1
        self.chain.append(
            EventKind.DID_UPDATED,
            {"did": record.did, "version": record.version,
             "change": {"status": status.value}},
            actor=actor,
            epoch=epoch,
        )
        return record.version

    # --- metadata convenience ---

    def attach_metadata(self, did: str, blob: bytes, actor: str, *, epoch: int = 0) -> bytes:
        """Store a blob off-chain and record only its address on the record."""
        address = self.store.store(blob)
        self.update_did(did, actor, metadata_ref=address, epoch=epoch)
        return address


def metadata_blob(payload: dict) -> bytes:
    """Canonical bytes for a metadata document."""
    return canonical_json_bytes(payload)
