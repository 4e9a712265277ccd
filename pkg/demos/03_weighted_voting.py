"""Delegate elections and proposal tallies with caps, multipliers and quadratic costs.

Three stakeholders with very different stakes end up with identical
effective power once the 20% cap binds, and a 2/3 vote on a critical
proposal fails because threshold comparisons are strict.
"""

from fractions import Fraction

from govsim.governance import (
    GovernanceState,
    ProposalKind,
    Stakeholder,
    VoteDirection,
    VoteMode,
    default_weights,
    effective_power,
    total_raw_power,
)
from govsim.identity import Role
from govsim.keys import get_scheme
from govsim.ledger import Chain
from govsim.tokens import Pool, TokenLedger

stakeholders = [
    Stakeholder("bank-alpha", Role.BANK, stake=100),
    Stakeholder("fintech-beta", Role.FINTECH, stake=50),
    Stakeholder("regulator-eu", Role.REGULATOR, stake=50),
]
weights = default_weights()
total = total_raw_power(stakeholders, weights)
print(f"total raw power {total} (regulator stake counts 1.5x)")
for s in stakeholders:
    print(f"  {s.id:14} stake {s.stake:>4} -> effective {effective_power(s, weights, total)}")
print("the 20% cap levels all three at 45.\n")

chain = Chain({"a1": get_scheme("seeded").generate(b"a1").public}, quorum=1)
tokens = TokenLedger(10_000, {Pool.REWARDS: 0}, chain=chain)
state = GovernanceState(chain, tokens)
for s in stakeholders:
    state.add_stakeholder(s)
    tokens.balances[s.id] = s.stake
    tokens.stake(s.id, s.stake, 8, epoch=0)
state.sync_stakes()

print("election for 2 seats:", state.run_election(2), "(tie broken by id)\n")

state.submit_proposal("tighten-rules", ProposalKind.CRITICAL, {})
state.cast_vote("bank-alpha", "tighten-rules", VoteDirection.FOR)
state.cast_vote("fintech-beta", "tighten-rules", VoteDirection.FOR)
state.cast_vote("regulator-eu", "tighten-rules", VoteDirection.AGAINST)
status = state.tally("tighten-rules")
proposal = state.proposals["tighten-rules"]
share = proposal.tally_for / (proposal.tally_for + proposal.tally_against)
print(f"critical proposal: for={proposal.tally_for} against={proposal.tally_against}")
print(f"support {share} is not STRICTLY above 2/3 -> {status.value}\n")

# Quadratic mode: influence costs the square of the magnitude.
tokens.balances["fintech-beta"] += 100
state.submit_proposal("fee-discount", ProposalKind.ROUTINE, {},
                      mode=VoteMode.QUADRATIC)
before = tokens.balances["fintech-beta"]
state.cast_vote("fintech-beta", "fee-discount", VoteDirection.FOR,
                magnitude=7, mode=VoteMode.QUADRATIC)
print(f"quadratic vote of magnitude 7 cost {before - tokens.balances['fintech-beta']} tokens "
      f"(now in the governance pool: {tokens.pools[Pool.GOVERNANCE]})")
assert before - tokens.balances["fintech-beta"] == 49
