"""DPoS stakeholder governance.

All power arithmetic is exact (fractions.Fraction), so threshold decisions
at boundaries like 2/3 are deterministic. Threshold comparisons are STRICT:
a proposal at exactly the threshold fails. Election ties break by ascending
stakeholder id. Zero-participation proposals are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Optional, Sequence

from .encoding import as_fraction
from .errors import (
    AlreadyResolved,
    AlreadyVoted,
    InsufficientCandidates,
    InvalidInput,
    InvalidWeights,
    NoVotingPower,
    ProposalClosed,
)
from .identity import Role
from .ledger import Chain, EventKind
from .tokens import Pool, TokenLedger


class ProposalKind(str, Enum):
    ROUTINE = "ROUTINE"
    CRITICAL = "CRITICAL"
    WEIGHT_ADJUSTMENT = "WEIGHT_ADJUSTMENT"
    RULE_UPDATE = "RULE_UPDATE"


class ProposalStatus(str, Enum):
    OPEN = "OPEN"
    PASSED = "PASSED"
    REJECTED = "REJECTED"


class VoteDirection(str, Enum):
    FOR = "FOR"
    AGAINST = "AGAINST"


class VoteMode(str, Enum):
    LINEAR = "LINEAR"
    QUADRATIC = "QUADRATIC"


@dataclass
class VoteWeights:
    role_multiplier: dict[Role, Fraction]
    cap_fraction: Fraction = Fraction(1, 5)
    threshold_routine: Fraction = Fraction(1, 2)
    threshold_critical: Fraction = Fraction(2, 3)

    def validate(self) -> "VoteWeights":
        if not 0 < self.cap_fraction <= 1:
            raise InvalidWeights("cap_fraction must be in (0, 1]")
        for threshold in (self.threshold_routine, self.threshold_critical):
            if not 0 < threshold <= 1:
                raise InvalidWeights("thresholds must be in (0, 1]")
        for role, multiplier in self.role_multiplier.items():
            if multiplier <= 0:
                raise InvalidWeights(f"multiplier for {role.value} must be positive")
        return self

    def multiplier(self, role: Role) -> Fraction:
        return self.role_multiplier.get(role, Fraction(1))

    def threshold(self, kind: ProposalKind) -> Fraction:
        # Anything that rewrites the rules of the game takes the critical bar.
        if kind == ProposalKind.ROUTINE:
            return self.threshold_routine
        return self.threshold_critical

    def to_json(self) -> dict:
        return {
            "role_multiplier": {r.value: str(m) for r, m in sorted(
                self.role_multiplier.items(), key=lambda kv: kv[0].value)},
            "cap_fraction": str(self.cap_fraction),
            "threshold_routine": str(self.threshold_routine),
            "threshold_critical": str(self.threshold_critical),
        }


def default_weights() -> VoteWeights:
    return VoteWeights(role_multiplier={Role.REGULATOR: Fraction(3, 2)})


@dataclass
class Stakeholder:
    id: str
    role: Role
    stake: int = 0
    is_delegate: bool = False
    # Temporary multiplicative reduction while under collusion scrutiny.
    weight_penalty: Fraction = Fraction(1)
    vote_history: dict[str, VoteDirection] = field(default_factory=dict)


@dataclass
class Vote:
    direction: VoteDirection
    magnitude: int
    mode: VoteMode


@dataclass
class Proposal:
    proposal_id: str
    kind: ProposalKind
    payload: dict
    # One voting mode per proposal; mixing stake-weighted power with
    # quadratic magnitudes in a single tally would compare unlike units.
    mode: VoteMode = VoteMode.LINEAR
    status: ProposalStatus = ProposalStatus.OPEN
    votes: dict[str, Vote] = field(default_factory=dict)
    tally_for: Fraction = Fraction(0)
    tally_against: Fraction = Fraction(0)


# --- pure power math ---

def raw_power(stakeholder: Stakeholder, weights: VoteWeights) -> Fraction:
    return (
        Fraction(stakeholder.stake)
        * weights.multiplier(stakeholder.role)
        * stakeholder.weight_penalty
    )


def total_raw_power(stakeholders: Sequence[Stakeholder], weights: VoteWeights) -> Fraction:
    return sum((raw_power(s, weights) for s in stakeholders), Fraction(0))


def effective_power(
    stakeholder: Stakeholder, weights: VoteWeights, total_raw: Fraction
) -> Fraction:
    """min(raw weighted power, cap_fraction * total raw power)."""
    if total_raw <= 0:
        raise NoVotingPower("total raw weighted power is zero")
    return min(raw_power(stakeholder, weights), weights.cap_fraction * total_raw)


def rank_delegates(
    stakeholders: Sequence[Stakeholder], weights: VoteWeights, n_seats: int
) -> list[str]:
    """Top n_seats ids by effective power, ties by ascending id. Pure."""
    if n_seats < 1:
        raise InvalidInput("n_seats must be positive")
    total = total_raw_power(stakeholders, weights)
    if total <= 0:
        raise InsufficientCandidates("no stakeholder has positive power")
    powered = [
        (effective_power(s, weights, total), s.id)
        for s in stakeholders
    ]
    eligible = [(p, sid) for p, sid in powered if p > 0]
    if len(eligible) < n_seats:
        raise InsufficientCandidates(
            f"{len(eligible)} eligible stakeholders < {n_seats} seats"
        )
    eligible.sort(key=lambda t: (-t[0], t[1]))
    return [sid for _, sid in eligible[:n_seats]]


def detect_collusion(
    vote_history: Mapping[str, Mapping[str, VoteDirection]],
    min_common: int,
    agreement_threshold: Fraction,
) -> set[tuple[str, str]]:
    """Pairs voting identically on >= threshold of >= min_common shared proposals.

    Pure over the supplied history; returns lexicographically ordered pairs.
    """
    flagged: set[tuple[str, str]] = set()
    for a, b in combinations(sorted(vote_history), 2):
        history_a, history_b = vote_history[a], vote_history[b]
        shared = history_a.keys() & history_b.keys()
        if len(shared) < min_common:
            continue
        identical = sum(1 for p in shared if history_a[p] == history_b[p])
        if Fraction(identical, len(shared)) >= agreement_threshold:
            flagged.add((a, b))
    return flagged


# --- stateful governance ---

class GovernanceState:
    def __init__(
        self,
        chain: Chain,
        tokens: TokenLedger,
        weights: Optional[VoteWeights] = None,
    ):
        self.chain = chain
        self.tokens = tokens
        self.weights = (weights or default_weights()).validate()
        self.stakeholders: dict[str, Stakeholder] = {}
        self.proposals: dict[str, Proposal] = {}
        self.delegates: list[str] = []
        self._staged_weights: Optional[VoteWeights] = None

    def add_stakeholder(self, stakeholder: Stakeholder) -> None:
        self.stakeholders[stakeholder.id] = stakeholder

    def sync_stakes(self) -> None:
        """Mirror staked totals from the token ledger (single source of truth)."""
        for stakeholder in self.stakeholders.values():
            stakeholder.stake = self.tokens.staked_total(stakeholder.id)

    def roles_view(self) -> dict[str, Role]:
        return {sid: s.role for sid, s in self.stakeholders.items()}

    # --- proposals and votes ---

    def submit_proposal(self, proposal_id: str, kind: ProposalKind, payload: dict,
                        *, mode: VoteMode = VoteMode.LINEAR,
                        actor: str = "governance", epoch: int = 0) -> Proposal:
        if proposal_id in self.proposals:
            raise InvalidInput(f"duplicate proposal id {proposal_id}")
        proposal = Proposal(proposal_id=proposal_id, kind=kind, payload=payload,
                            mode=mode)
        self.proposals[proposal_id] = proposal
        self.chain.append(
            EventKind.PROPOSAL_SUBMITTED,
            {"proposal_id": proposal_id, "kind": kind.value,
             "mode": mode.value, "payload": payload},
            actor=actor, epoch=epoch,
        )
        return proposal

    def cast_vote(
        self,
        stakeholder_id: str,
        proposal_id: str,
        direction: VoteDirection,
        *,
        magnitude: int = 1,
        mode: Optional[VoteMode] = None,
        epoch: int = 0,
    ) -> Vote:
        proposal = self.proposals[proposal_id]
        if proposal.status != ProposalStatus.OPEN:
            raise ProposalClosed(f"{proposal_id} is {proposal.status.value}")
        if stakeholder_id in proposal.votes:
            raise AlreadyVoted(f"{stakeholder_id} already voted on {proposal_id}")
        if mode is None:
            mode = proposal.mode
        elif mode != proposal.mode:
            raise InvalidInput(
                f"{proposal_id} tallies in {proposal.mode.value} mode")
        stakeholder = self.stakeholders[stakeholder_id]
        if magnitude < 1:
            raise InvalidInput("magnitude must be positive")
        cost = 0
        if mode == VoteMode.LINEAR:
            if magnitude != 1:
                raise InvalidInput("LINEAR votes carry magnitude 1; weight comes from stake")
        else:
            cost = magnitude * magnitude
            self.tokens.charge_to_pool(
                stakeholder_id, Pool.GOVERNANCE, cost,
                epoch=epoch, reason="quadratic_vote", ref=proposal_id,
            )
        vote = Vote(direction=direction, magnitude=magnitude, mode=mode)
        proposal.votes[stakeholder_id] = vote
        stakeholder.vote_history[proposal_id] = direction
        self.chain.append(
            EventKind.VOTE_CAST,
            {"proposal_id": proposal_id, "voter": stakeholder_id,
             "direction": direction.value, "magnitude": magnitude,
             "mode": mode.value, "cost": cost},
            actor=stakeholder_id, epoch=epoch,
        )
        return vote

    def tally(self, proposal_id: str, *, epoch: int = 0) -> ProposalStatus:
        """Resolve once; strict-majority comparison against the kind's threshold."""
        proposal = self.proposals[proposal_id]
        if proposal.status != ProposalStatus.OPEN:
            raise AlreadyResolved(f"{proposal_id} already {proposal.status.value}")
        power_for = Fraction(0)
        power_against = Fraction(0)
        total = total_raw_power(list(self.stakeholders.values()), self.weights)
        for voter_id, vote in proposal.votes.items():
            if proposal.mode == VoteMode.QUADRATIC:
                power = Fraction(vote.magnitude)
            else:
                power = effective_power(self.stakeholders[voter_id], self.weights, total)
            if vote.direction == VoteDirection.FOR:
                power_for += power
            else:
                power_against += power
        turnout = power_for + power_against
        threshold = self.weights.threshold(proposal.kind)
        if turnout == 0:
            status = ProposalStatus.REJECTED
        elif power_for / turnout > threshold:
            status = ProposalStatus.PASSED
        else:
            status = ProposalStatus.REJECTED
        proposal.status = status
        proposal.tally_for = power_for
        proposal.tally_against = power_against
        self.chain.append(
            EventKind.PROPOSAL_RESOLVED,
            {"proposal_id": proposal_id, "status": status.value,
             "power_for": str(power_for), "power_against": str(power_against),
             "threshold": str(threshold), "kind": proposal.kind.value,
             "mode": proposal.mode.value},
            actor="governance", epoch=epoch,
        )
        return status

    # --- elections ---

    def run_election(self, n_seats: int, *, epoch: int = 0) -> list[str]:
        elected = rank_delegates(list(self.stakeholders.values()), self.weights, n_seats)
        for stakeholder in self.stakeholders.values():
            stakeholder.is_delegate = stakeholder.id in elected
        self.delegates = elected
        self.chain.append(
            EventKind.DELEGATE_ELECTED,
            {"delegates": elected, "n_seats": n_seats},
            actor="governance", epoch=epoch,
        )
        return elected

    # --- adaptive weights ---

    def adjust_weights(self, proposal: Proposal, *, epoch: int = 0) -> VoteWeights:
        """Stage new weights from a passed WEIGHT_ADJUSTMENT proposal.

        The replacement happens atomically at the next epoch boundary via
        apply_staged_weights().
        """
        if proposal.kind != ProposalKind.WEIGHT_ADJUSTMENT:
            raise InvalidInput("not a WEIGHT_ADJUSTMENT proposal")
        if proposal.status != ProposalStatus.PASSED:
            raise InvalidInput("weights change only on a PASSED proposal")
        payload = proposal.payload
        new = VoteWeights(
            role_multiplier={
                Role(r): as_fraction(m)
                for r, m in payload.get("role_multiplier", {}).items()
            } or dict(self.weights.role_multiplier),
            cap_fraction=as_fraction(
                payload.get("cap_fraction", self.weights.cap_fraction)),
            threshold_routine=as_fraction(
                payload.get("threshold_routine", self.weights.threshold_routine)),
            threshold_critical=as_fraction(
                payload.get("threshold_critical", self.weights.threshold_critical)),
        ).validate()
        self._staged_weights = new
        self.chain.append(
            EventKind.WEIGHTS_ADJUSTED,
            {"proposal_id": proposal.proposal_id, "weights": new.to_json(),
             "effective_epoch": epoch + 1},
            actor="governance", epoch=epoch,
        )
        return new

    def apply_staged_weights(self) -> bool:
        if self._staged_weights is None:
            return False
        self.weights = self._staged_weights
        self._staged_weights = None
        return True

    # --- collusion scrutiny ---

    def vote_histories(self) -> dict[str, dict[str, VoteDirection]]:
        return {sid: dict(s.vote_history) for sid, s in self.stakeholders.items()}

    def apply_collusion_penalty(self, stakeholder_id: str,
                                penalty: Fraction = Fraction(9, 10)) -> None:
        self.stakeholders[stakeholder_id].weight_penalty = penalty

    def clear_collusion_penalty(self, stakeholder_id: str) -> None:
        self.stakeholders[stakeholder_id].weight_penalty = Fraction(1)
