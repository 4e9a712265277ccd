"""Append-only, hash-chained, multi-signature-sealed event log.

Single source of truth for every state transition. Events queue into
fixed-capacity pending blocks; sealing requires a quorum of distinct
authority signatures over the candidate block hash. Verification is total:
any single-byte mutation of a sealed chain is reported at (or before) the
mutated height.

Concurrency: one writer (append/seal) at a time; reads against sealed
blocks are safe concurrently with each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, NamedTuple, Optional, Sequence

from .encoding import (
    DIGEST_SIZE,
    ZERO_DIGEST,
    ByteReader,
    canonical_json_bytes,
    is_canonical_json,
    pack_bytes,
    pack_str,
    pack_u32,
    pack_u64,
    sha256,
)
from .errors import (
    EncodingError,
    IoError,
    NothingToSeal,
    OrderingViolation,
    QuorumNotMet,
    SignatureInvalid,
    UnknownAuthority,
)
from .keys import get_scheme

# 16-byte magic header (the GOVCHAIN tag, zero padded), then a version byte.
CHAIN_MAGIC = b"GOVCHAIN".ljust(16, b"\x00")
CHAIN_FORMAT_VERSION = 1
DEFAULT_BLOCK_CAPACITY = 100


class EventKind(str, Enum):
    DID_REGISTERED = "DID_REGISTERED"
    DID_UPDATED = "DID_UPDATED"
    DELEGATE_ELECTED = "DELEGATE_ELECTED"
    PROPOSAL_SUBMITTED = "PROPOSAL_SUBMITTED"
    VOTE_CAST = "VOTE_CAST"
    PROPOSAL_RESOLVED = "PROPOSAL_RESOLVED"
    ASSESSMENT_RECORDED = "ASSESSMENT_RECORDED"
    AUDIT_RECORDED = "AUDIT_RECORDED"
    AUDITOR_ACCREDITED = "AUDITOR_ACCREDITED"
    TOKENS_TRANSFERRED = "TOKENS_TRANSFERRED"
    STAKE_CHANGED = "STAKE_CHANGED"
    SLASH_APPLIED = "SLASH_APPLIED"
    INCIDENT_RAISED = "INCIDENT_RAISED"
    INCIDENT_ADVANCED = "INCIDENT_ADVANCED"
    RISK_RECLASSIFIED = "RISK_RECLASSIFIED"
    ORACLE_UPDATE = "ORACLE_UPDATE"
    ACCESS_LOGGED = "ACCESS_LOGGED"
    WEIGHTS_ADJUSTED = "WEIGHTS_ADJUSTED"
    # Additions beyond the core transition kinds: a liveness tick so epochs
    # with no activity still seal a block, a carrier for coordinated-voting
    # flags, and rule-registry updates.
    HEARTBEAT = "HEARTBEAT"
    COLLUSION_FLAGGED = "COLLUSION_FLAGGED"
    RULE_REGISTERED = "RULE_REGISTERED"


@dataclass(frozen=True)
class GovernanceEvent:
    """One state transition. Payload bytes must be canonical JSON."""

    event_id: int
    kind: EventKind
    epoch: int
    payload: bytes
    actor: str

    def encode(self) -> bytes:
        return (
            pack_u64(self.event_id)
            + pack_str(self.kind.value)
            + pack_u64(self.epoch)
            + pack_bytes(self.payload)
            + pack_str(self.actor)
        )

    def body(self) -> dict:
        """Decode the payload back into its JSON body."""
        from .encoding import from_canonical_json

        return from_canonical_json(self.payload)


def decode_event(reader: ByteReader) -> GovernanceEvent:
    return GovernanceEvent(
        event_id=reader.u64(),
        kind=EventKind(reader.str_()),
        epoch=reader.u64(),
        payload=reader.bytes_(),
        actor=reader.str_(),
    )


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    events: tuple[GovernanceEvent, ...]
    sealer_signatures: tuple[tuple[str, bytes], ...]
    block_hash: bytes


class PendingPosition(NamedTuple):
    height: int
    index: int


def compute_block_hash(height: int, prev_hash: bytes, events: Sequence[GovernanceEvent]) -> bytes:
    body = pack_u64(height) + prev_hash
    for event in events:
        body += pack_bytes(event.encode())
    return sha256(body)


@dataclass(frozen=True)
class ChainVerification:
    ok: bool
    failed_height: Optional[int] = None
    reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok


def default_quorum(n_authorities: int) -> int:
    return math.ceil(2 * n_authorities / 3)


class Chain:
    """Pending queue plus sealed blocks, bound to an authority set."""

    def __init__(
        self,
        authorities: Mapping[str, bytes],
        *,
        quorum: Optional[int] = None,
        capacity: int = DEFAULT_BLOCK_CAPACITY,
        scheme: str = "seeded",
    ):
        if capacity < 1:
            raise ValueError("block capacity must be >= 1")
        if not authorities:
            raise ValueError("at least one sealing authority required")
        self.authorities = dict(authorities)
        self.quorum = default_quorum(len(self.authorities)) if quorum is None else quorum
        if self.quorum < 1:
            raise ValueError("sealing quorum must be >= 1")
        self.capacity = capacity
        self.scheme_name = scheme
        self.scheme = get_scheme(scheme)
        self.blocks: list[Block] = []
        self.pending: list[GovernanceEvent] = []
        # When set (by the simulator), a "phase" key is stamped into every
        # body built through append().
        self.phase_provider: Optional[Callable[[], int]] = None

    # --- append ---

    @property
    def last_event_id(self) -> int:
        if self.pending:
            return self.pending[-1].event_id
        for block in reversed(self.blocks):
            if block.events:
                return block.events[-1].event_id
        return 0

    def append_event(self, event: GovernanceEvent) -> PendingPosition:
        """Queue a fully-formed event; enforces id continuity and canonical payload."""
        expected = self.last_event_id + 1
        if event.event_id != expected:
            raise OrderingViolation(
                f"event_id {event.event_id} does not follow last id {expected - 1}"
            )
        if not is_canonical_json(event.payload):
            raise EncodingError("event payload is not canonical JSON")
        index = len(self.pending)
        self.pending.append(event)
        height = len(self.blocks) + 1 + index // self.capacity
        return PendingPosition(height=height, index=index % self.capacity)

    def append(self, kind: EventKind, body: dict, *, actor: str, epoch: int) -> GovernanceEvent:
        """Build the next event from a JSON body and queue it."""
        if self.phase_provider is not None:
            body = {**body, "phase": self.phase_provider()}
        event = GovernanceEvent(
            event_id=self.last_event_id + 1,
            kind=kind,
            epoch=epoch,
            payload=canonical_json_bytes(body),
            actor=actor,
        )
        self.append_event(event)
        return event

    # --- seal ---

    @property
    def head_hash(self) -> bytes:
        return self.blocks[-1].block_hash if self.blocks else ZERO_DIGEST

    def candidate_events(self) -> tuple[GovernanceEvent, ...]:
        return tuple(self.pending[: self.capacity])

    def candidate_hash(self) -> bytes:
        if not self.pending:
            raise NothingToSeal("no pending events")
        return compute_block_hash(
            len(self.blocks) + 1, self.head_hash, self.candidate_events()
        )

    def seal_block(self, authority_signatures: Iterable[tuple[str, bytes]]) -> Block:
        """Finalize the oldest pending block under a signature quorum."""
        candidate = self.candidate_events()
        if not candidate:
            raise NothingToSeal("no pending events")
        height = len(self.blocks) + 1
        block_hash = compute_block_hash(height, self.head_hash, candidate)

        signatures = tuple(authority_signatures)
        valid_signers: set[str] = set()
        for authority_id, signature in signatures:
            public = self.authorities.get(authority_id)
            if public is None:
                raise UnknownAuthority(f"unregistered sealer: {authority_id}")
            if not self.scheme.verify(public, block_hash, signature):
                raise SignatureInvalid(f"bad signature from {authority_id}")
            valid_signers.add(authority_id)
        if len(valid_signers) < self.quorum:
            raise QuorumNotMet(
                f"{len(valid_signers)} distinct signers < quorum {self.quorum}"
            )

        block = Block(
            height=height,
            prev_hash=self.head_hash,
            events=candidate,
            sealer_signatures=signatures,
            block_hash=block_hash,
        )
        self.blocks.append(block)
        del self.pending[: len(candidate)]
        return block

    def seal_all(self, private_keys: Mapping[str, bytes]) -> list[Block]:
        """Seal every pending block, signing with the given authority keys."""
        sealed = []
        while self.pending:
            digest = self.candidate_hash()
            signatures = [
                (authority_id, self.scheme.sign(private, digest))
                for authority_id, private in sorted(private_keys.items())
            ]
            sealed.append(self.seal_block(signatures))
        return sealed


def verify_chain(
    blocks: Sequence[Block],
    authorities: Mapping[str, bytes],
    quorum: int,
    scheme: str = "seeded",
) -> ChainVerification:
    """Check hashes, linkage, quorum signatures and event-id continuity.

    Read-only; reports the first failing height instead of raising.
    """
    sig = get_scheme(scheme)
    prev_hash = ZERO_DIGEST
    next_event_id = 1
    for position, block in enumerate(blocks, start=1):
        if block.height != position:
            return ChainVerification(False, position, "height mismatch")
        recomputed = compute_block_hash(block.height, block.prev_hash, block.events)
        if recomputed != block.block_hash:
            return ChainVerification(False, position, "block hash mismatch")
        if block.prev_hash != prev_hash:
            return ChainVerification(False, position, "broken prev_hash linkage")
        valid_signers = set()
        for authority_id, signature in block.sealer_signatures:
            public = authorities.get(authority_id)
            if public is not None and sig.verify(public, block.block_hash, signature):
                valid_signers.add(authority_id)
        if len(valid_signers) < quorum:
            return ChainVerification(False, position, "sealer quorum not met")
        for event in block.events:
            if event.event_id != next_event_id:
                return ChainVerification(False, position, "event id discontinuity")
            next_event_id += 1
        prev_hash = block.block_hash
    return ChainVerification(True)


def query_events(
    blocks: Sequence[Block],
    *,
    kind: Optional[EventKind] = None,
    epoch: Optional[int] = None,
    actor: Optional[str] = None,
    predicate: Optional[Callable[[GovernanceEvent], bool]] = None,
) -> list[GovernanceEvent]:
    """All sealed events matching the filters, in event_id order."""
    out = []
    for block in blocks:
        for event in block.events:
            if kind is not None and event.kind != kind:
                continue
            if epoch is not None and event.epoch != epoch:
                continue
            if actor is not None and event.actor != actor:
                continue
            if predicate is not None and not predicate(event):
                continue
            out.append(event)
    out.sort(key=lambda e: e.event_id)
    return out


# --- chain file format ---
# magic(8) | version(1) | header json (len-prefixed) | u64 block count | blocks

def _encode_block(block: Block) -> bytes:
    out = pack_u64(block.height) + block.prev_hash + pack_u32(len(block.events))
    for event in block.events:
        out += pack_bytes(event.encode())
    out += pack_u32(len(block.sealer_signatures))
    for authority_id, signature in block.sealer_signatures:
        out += pack_str(authority_id) + pack_bytes(signature)
    out += block.block_hash
    return out


def _decode_block(reader: ByteReader) -> Block:
    height = reader.u64()
    prev_hash = reader.raw(DIGEST_SIZE)
    events = tuple(
        decode_event(ByteReader(reader.bytes_())) for _ in range(reader.u32())
    )
    signatures = tuple(
        (reader.str_(), reader.bytes_()) for _ in range(reader.u32())
    )
    block_hash = reader.raw(DIGEST_SIZE)
    return Block(height, prev_hash, events, signatures, block_hash)


def save_chain(chain: Chain, path: str | Path) -> None:
    header = {
        "authorities": {aid: pub.hex() for aid, pub in sorted(chain.authorities.items())},
        "quorum": chain.quorum,
        "capacity": chain.capacity,
        "scheme": chain.scheme_name,
    }
    out = CHAIN_MAGIC + bytes([CHAIN_FORMAT_VERSION])
    out += pack_bytes(canonical_json_bytes(header))
    out += pack_u64(len(chain.blocks))
    for block in chain.blocks:
        out += pack_bytes(_encode_block(block))
    Path(path).write_bytes(out)


def load_chain(path: str | Path) -> Chain:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read chain file: {exc}") from exc
    reader = ByteReader(data)
    if reader.raw(len(CHAIN_MAGIC)) != CHAIN_MAGIC:
        raise IoError("not a chain file (bad magic)")
    version = reader.raw(1)[0]
    if version != CHAIN_FORMAT_VERSION:
        raise IoError(f"unsupported chain format version {version}")
    from .encoding import from_canonical_json

    header = from_canonical_json(reader.bytes_())
    chain = Chain(
        {aid: bytes.fromhex(pub) for aid, pub in header["authorities"].items()},
        quorum=header["quorum"],
        capacity=header["capacity"],
        scheme=header["scheme"],
    )
    n_blocks = reader.u64()
    for _ in range(n_blocks):
        block_reader = ByteReader(reader.bytes_())
        block = _decode_block(block_reader)
        if not block_reader.exhausted():
            raise IoError("trailing bytes inside block frame")
        chain.blocks.append(block)
    if not reader.exhausted():
        raise IoError("trailing bytes after final block")
    return chain


def verify_chain_file(path: str | Path) -> ChainVerification:
    chain = load_chain(path)
    return verify_chain(chain.blocks, chain.authorities, chain.quorum, chain.scheme_name)
