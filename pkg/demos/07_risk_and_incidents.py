"""Risk scoring, tier reclassification, forecasting and the incident machine.

score = 0.5*(1-compliance) + 0.2*audit_failure + 0.2*min(incidents,3)/3
        + 0.1*exposure, cut at 0.9/0.6/0.3 into the four tiers.
"""

from fractions import Fraction

from govsim.identity import ComplianceStatus, ContentStore, DidRegistry, RiskTier, Role
from govsim.keys import get_scheme
from govsim.ledger import Chain
from govsim.risk import (
    IncidentLog,
    RiskEngine,
    Severity,
    compute_risk_score,
    forecast_compliance,
    tier_for_score,
)

print("score sensitivity (perfect -> broken):")
for label, args in [
    ("fully compliant, calm", (Fraction(1), False, 0, Fraction(0))),
    ("half compliant, one incident", (Fraction(1, 2), False, 1, Fraction(3, 10))),
    ("failed audit on top", (Fraction(1, 2), True, 1, Fraction(3, 10))),
    ("worst case", (Fraction(0), True, 3, Fraction(1))),
]:
    score = compute_risk_score(*args)
    print(f"  {label:30} score {str(score):>8} -> {tier_for_score(score).value}")

print("\nEWMA compliance forecasting (alpha 0.3, floor 0.7):")
for series in ([0.95, 0.95, 0.9], [1.0, 0.5], [0.8, 0.7, 0.6, 0.5]):
    forecast, flagged = forecast_compliance(series)
    print(f"  history {series} -> forecast {forecast:.4f} "
          f"{'FLAGGED for pre-emptive audit' if flagged else 'ok'}")

# A critical incident suspends the system until the response team resolves it.
chain = Chain({"a1": get_scheme("seeded").generate(b"a1").public}, quorum=1)
registry = DidRegistry(chain, ContentStore(), {"bank-alpha": Role.BANK})
did = registry.register_did(b"\x77" * 32, "market making", RiskTier.HIGH, "bank-alpha")
log = IncidentLog(chain, registry)
engine = RiskEngine(chain, registry)

print(f"\nsystem registered at tier {registry.get(did).risk_tier.value}")
incident = log.raise_incident(did, Severity.CRITICAL, epoch=3)
print(f"critical incident raised -> status {registry.get(did).compliance_status.value}")
for epoch in (4, 5, 6):
    state = log.advance_incident(incident, epoch=epoch)
    print(f"  epoch {epoch}: incident {state.value}, "
          f"status {registry.get(did).compliance_status.value}")

score, tier, changed = engine.update(did, 7, Fraction(9, 10), exposure=Fraction(7, 10))
print(f"\nepoch-7 rescoring: score {score} -> tier {tier.value} "
      f"({'reclassified, written through to the registry' if changed else 'unchanged'})")
