"""End to end: run the credit-scoring scenario, inspect the trace, verify the chain.

A HIGH-tier credit scorer runs clean for four epochs, violates privacy and
capital rules at epoch 5, and the machinery responds within the epoch:
failed assessment, off-cadence audit, stake slash, status downgrade.
"""

import tempfile
from pathlib import Path

from govsim.ledger import save_chain
from govsim.report import export_report
from govsim.simctl import run_scenario, verify_run

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "credit_scoring.json"

result = run_scenario(SCENARIO)
report = result.report

print(f"sealed {report['blocks']} blocks over {report['epochs']} epochs; "
      f"root hash {report['root_hash'][:24]}…")
print(f"token conservation: {report['tokens']['conserved']} "
      f"(checksum {report['tokens']['checksum'][:16]}…)")

print("\nper-epoch event counts:")
for row in report["per_epoch"]:
    print(f"  epoch {row['epoch']:>2}: {row['events']:>3} events")

print("\ncompliance by tier:")
for tier, bucket in report["compliance"]["by_tier"].items():
    print(f"  {tier:8} {bucket['compliant']}/{bucket['assessments']} compliant "
          f"(rate {bucket['rate']})")

print(f"\naudits: {report['audits']['by_outcome']} triggered by "
      f"{report['audits']['by_trigger']}")

print("\nthe epoch-5 enforcement arc:")
for event in (e for b in result.chain.blocks for e in b.events if e.epoch == 5):
    body = event.body()
    detail = ""
    if event.kind.value == "ASSESSMENT_RECORDED":
        detail = f"compliant={body['compliant']} score={body['score']}"
    elif event.kind.value == "AUDIT_RECORDED":
        detail = f"outcome={body['outcome']} trigger={body['trigger']}"
    elif event.kind.value == "SLASH_APPLIED":
        detail = f"{body['holder']} burned {body['burned']}"
    elif event.kind.value == "DID_UPDATED":
        detail = str(body["change"])
    print(f"  {event.kind.value:22} {detail}")

print("\nreclassifications:", [
    (r["epoch"], r["old_tier"], "->", r["new_tier"])
    for r in report["risk_metrics"]["reclassifications"]
])

with tempfile.TemporaryDirectory() as tmp:
    chain_path = Path(tmp) / "chain.db"
    save_chain(result.chain, chain_path)
    export_report(report, Path(tmp) / "report.json")
    verification, report_matches = verify_run(chain_path)
    print(f"\nchain file verification: ok={verification.ok}; "
          f"report re-folds identically: {report_matches}")
    assert verification.ok and report_matches

rerun = run_scenario(SCENARIO)
print(f"re-run with the same seed reproduces the root hash: "
      f"{rerun.root_hash == result.root_hash}")
