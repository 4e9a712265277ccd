"""The canonical message boundary: validation, legacy rows, schema upgrades.

Messages carry a checksum over their canonical payload bytes; validation
returns every violation instead of stopping at the first, and refuses to
crash whatever bytes arrive.
"""

import json

from govsim.interop import (
    ColumnSpec,
    LegacyMapping,
    MsgType,
    convert_legacy,
    make_message,
    reverse_legacy,
    upgrade_message,
    validate_bytes,
    validate_message,
)

message = make_message(MsgType.COMPLIANCE_REPORT, 1, {
    "report_id": "rep-0007",
    "system_did": "did:govsim:" + "9f" * 16,
    "epoch": 12,
    "aggregate_score": 0.75,
    "compliant": True,
})
print(f"valid v1 report: checksum {message.checksum.hex()[:24]}…, "
      f"violations: {validate_message(message)}")

broken = message.to_json()
broken["payload"]["epoch"] = "twelve"
del broken["payload"]["compliant"]
print("a mangled copy reports every problem at once:")
for violation in validate_message(broken):
    print(f"  [{violation.code}] {violation.detail}")

mapping = LegacyMapping(
    msg_type=MsgType.COMPLIANCE_REPORT, schema_version=1, delimiter=",",
    columns=(
        ColumnSpec("REPORT_ID", "report_id", "str"),
        ColumnSpec("SYSTEM_DID", "system_did", "str"),
        ColumnSpec("EPOCH", "epoch", "int"),
        ColumnSpec("SCORE", "aggregate_score", "float"),
        ColumnSpec("COMPLIANT", "compliant", "bool"),
    ),
)
row = "rep-0042,did:govsim:feedface,9,0.8125,true"
converted = convert_legacy(row, mapping)
print(f"\nlegacy row in : {row}")
print(f"canonical     : {json.dumps(converted.payload, sort_keys=True)}")
print(f"legacy row out: {reverse_legacy(converted, mapping)} (byte-identical)")
assert reverse_legacy(converted, mapping) == row

v2 = upgrade_message(converted, 2)
print(f"\nupgraded to v{v2.schema_version}: gains auditor_id="
      f"{v2.payload['auditor_id']!r} with its declared default")
print(f"upgrade is idempotent: {upgrade_message(v2, 2) == v2}")

for blob in (b"", b"\xff\x00garbage", b"[1,2,", b'{"msg_type": 42}'):
    print(f"fuzz {blob!r:24} -> {[v.code for v in validate_bytes(blob)]}")
