"""Token accounting: genesis pools, staking, compliance-weighted rewards, slashing.

Every operation preserves, to the exact base unit:
    pools + balances + stakes + burned == total supply
"""

from fractions import Fraction

from govsim.tokens import Pool, SlashReason, TokenLedger

ledger = TokenLedger.mint_genesis()
print("genesis pools:", {p.value: f"{v:,}" for p, v in ledger.pools.items()})
print(f"per-epoch emission: {ledger.emission:,} (REWARDS/1000)\n")

for holder, amount in [("bank-alpha", 400_000), ("fintech-beta", 250_000),
                       ("auditor-one", 50_000)]:
    ledger.grant(Pool.DEVELOPMENT, holder, amount)

ledger.stake("bank-alpha", 300_000, lock_epochs=16, epoch=0)
ledger.stake("fintech-beta", 200_000, lock_epochs=8, epoch=0)
ledger.stake("auditor-one", 40_000, lock_epochs=4, epoch=0)
print("staked:", {h: ledger.staked_total(h) for h in ("bank-alpha", "fintech-beta", "auditor-one")})

# Rewards scale with stake, elapsed lock time, and the compliance of the
# systems each stakeholder operates (pure investors count as 1).
factors = {"bank-alpha": Fraction(1), "fintech-beta": Fraction(1, 2)}
payouts = ledger.distribute_rewards(4, factors)
print(f"epoch-4 rewards with factors {{bank 1, fintech 1/2}}: {payouts}")
print(f"conserved: {ledger.conserved()}\n")

burned = ledger.slash("fintech-beta", SlashReason.EVIDENCE_FORGED, epoch=5)
print(f"evidence forgery slash burns 20% of stake: {burned:,} burned, "
      f"{ledger.staked_total('fintech-beta'):,} remains")
print(f"cumulative burned: {ledger.burned:,}; conserved: {ledger.conserved()}")

total = sum(ledger.pools.values()) + sum(ledger.balances.values()) \
    + sum(ledger.staked_total(h) for h in ledger.stakes) + ledger.burned
print(f"\nledger equation: {total:,} == {ledger.total_supply:,}")
print(f"state checksum: {ledger.conservation_checksum()[:32]}…")
assert total == ledger.total_supply
