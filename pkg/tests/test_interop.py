import hashlib
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from govsim.errors import ConversionError, MalformedRecord, UnsupportedDowngrade
from govsim.interop import (
    CanonicalMessage,
    ColumnSpec,
    LegacyMapping,
    MsgType,
    convert_legacy,
    make_message,
    payload_checksum,
    reverse_legacy,
    upgrade_message,
    validate_bytes,
    validate_message,
)

V1_REPORT_PAYLOAD = {
    "report_id": "rep-001",
    "system_did": "did:govsim:" + "ab" * 16,
    "epoch": 5,
    "aggregate_score": 0.75,
    "compliant": True,
}

COMPLIANCE_MAPPING = LegacyMapping(
    msg_type=MsgType.COMPLIANCE_REPORT,
    schema_version=1,
    delimiter=",",
    columns=(
        ColumnSpec("REPORT_ID", "report_id", "str"),
        ColumnSpec("DID", "system_did", "str"),
        ColumnSpec("EPOCH", "epoch", "int"),
        ColumnSpec("SCORE", "aggregate_score", "float"),
        ColumnSpec("OK", "compliant", "bool"),
    ),
)


def make_v1_report(**overrides):
    payload = {**V1_REPORT_PAYLOAD, **overrides}
    return make_message(MsgType.COMPLIANCE_REPORT, 1, payload)


# --- validation ---

def test_well_formed_v1_report_is_valid():
    assert validate_message(make_v1_report()) == []


def test_missing_field_is_exactly_one_violation():
    message = make_v1_report().to_json()
    del message["payload"]["epoch"]
    message["checksum"] = payload_checksum(message["payload"]).hex()
    violations = validate_message(message)
    assert len(violations) == 1
    assert violations[0].code == "missing_field"
    assert violations[0].field == "epoch"


def test_type_mismatch_detected():
    message = make_v1_report().to_json()
    message["payload"]["epoch"] = "five"
    message["checksum"] = payload_checksum(message["payload"]).hex()
    codes = {v.code for v in validate_message(message)}
    assert codes == {"type_mismatch"}


def test_payload_mutation_breaks_checksum():
    message = make_v1_report().to_json()
    message["payload"]["epoch"] = 6  # checksum not recomputed
    violations = validate_message(message)
    assert [v.code for v in violations] == ["checksum_mismatch"]
    # Independent digest oracle.
    canonical = json.dumps(message["payload"], sort_keys=True,
                           separators=(",", ":")).encode()
    assert hashlib.sha256(canonical).hexdigest() != message["checksum"]


def test_unknown_version_and_type():
    assert validate_message({"msg_type": "COMPLIANCE_REPORT", "schema_version": 9,
                             "payload": {}, "checksum": ""})[0].code == "unknown_version"
    assert validate_message({"msg_type": "TELEGRAM", "schema_version": 1,
                             "payload": {}, "checksum": ""})[0].code == "unknown_type"


def test_undeclared_field_flagged():
    message = make_v1_report().to_json()
    message["payload"]["stray"] = 1
    message["checksum"] = payload_checksum(message["payload"]).hex()
    assert {v.code for v in validate_message(message)} == {"unexpected_field"}


def test_bool_is_not_an_int():
    message = make_v1_report().to_json()
    message["payload"]["epoch"] = True
    message["checksum"] = payload_checksum(message["payload"]).hex()
    assert {v.code for v in validate_message(message)} == {"type_mismatch"}


# --- legacy conversion ---

def test_five_column_row_round_trips_byte_exact():
    row = "rep-042,did:govsim:ffff,12,0.8125,true"
    message = convert_legacy(row, COMPLIANCE_MAPPING)
    assert validate_message(message) == []
    assert message.payload["epoch"] == 12
    assert message.payload["aggregate_score"] == 0.8125
    assert reverse_legacy(message, COMPLIANCE_MAPPING) == row


def test_four_of_five_columns_rejected():
    with pytest.raises(MalformedRecord):
        convert_legacy("rep-042,did:x,12,0.8", COMPLIANCE_MAPPING)


def test_non_numeric_in_numeric_column_names_it():
    with pytest.raises(ConversionError, match="EPOCH"):
        convert_legacy("rep-042,did:x,twelve,0.8,true", COMPLIANCE_MAPPING)


def generated_corpus(n, seed=1234):
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        rows.append(",".join([
            f"rep-{i:05d}",
            "did:govsim:" + "".join(rng.choice("0123456789abcdef") for _ in range(32)),
            str(rng.randint(0, 500)),
            repr(round(rng.uniform(0, 1), 6)),
            rng.choice(["true", "false"]),
        ]))
    return rows


def test_generated_corpus_round_trips():
    for row in generated_corpus(200):
        message = convert_legacy(row, COMPLIANCE_MAPPING)
        assert reverse_legacy(message, COMPLIANCE_MAPPING) == row
        assert validate_message(message) == []


def test_mapping_json_round_trip():
    data = COMPLIANCE_MAPPING.to_json()
    assert LegacyMapping.from_json(data) == COMPLIANCE_MAPPING


# --- versioning ---

def test_upgrade_v1_to_v2_adds_default():
    upgraded = upgrade_message(make_v1_report(), 2)
    assert upgraded.schema_version == 2
    assert upgraded.payload["auditor_id"] == ""
    assert validate_message(upgraded) == []


def test_upgrade_same_version_is_identity():
    message = make_v1_report()
    assert upgrade_message(message, 1) == message
    v2 = upgrade_message(message, 2)
    assert upgrade_message(v2, 2) == v2


def test_downgrade_rejected():
    v2 = upgrade_message(make_v1_report(), 2)
    with pytest.raises(UnsupportedDowngrade):
        upgrade_message(v2, 1)


def test_transaction_upgrade_drops_memo_adds_currency():
    v1 = make_message(MsgType.TRANSACTION_DATA, 1, {
        "tx_id": "t1", "sender": "a", "receiver": "b",
        "amount": 100, "memo": "legacy free text",
    })
    v2 = upgrade_message(v1, 2)
    assert "memo" not in v2.payload
    assert v2.payload["currency"] == "EUR"
    assert validate_message(v2) == []


def test_every_msg_type_upgrades_v1_to_v2():
    rng = random.Random(9)
    samples = {
        MsgType.COMPLIANCE_REPORT: lambda: dict(V1_REPORT_PAYLOAD),
        MsgType.RISK_ASSESSMENT: lambda: {
            "assessment_id": "a1", "system_did": "d", "epoch": rng.randint(0, 9),
            "score": rng.random(), "tier": "HIGH"},
        MsgType.TRANSACTION_DATA: lambda: {
            "tx_id": "t", "sender": "s", "receiver": "r",
            "amount": rng.randint(1, 100), "memo": "m"},
        MsgType.AUDIT_REQUEST: lambda: {
            "request_id": "q", "system_did": "d", "reason": "cadence",
            "priority": rng.randint(0, 3)},
    }
    for msg_type, build in samples.items():
        for _ in range(10):
            v1 = make_message(msg_type, 1, build())
            assert validate_message(v1) == []
            v2 = upgrade_message(v1, 2)
            assert validate_message(v2) == []
            assert v2.checksum == payload_checksum(v2.payload)


# --- totality ---

@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=400))
def test_validate_bytes_never_raises_on_binary(raw):
    violations = validate_bytes(raw)
    assert isinstance(violations, list)


@settings(max_examples=200, deadline=None)
@given(st.recursive(
    st.none() | st.booleans() | st.integers() | st.floats(allow_nan=False) | st.text(max_size=20),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(max_size=8), children, max_size=4),
    max_leaves=12,
))
def test_validate_bytes_never_raises_on_arbitrary_json(value):
    raw = json.dumps(value).encode()
    violations = validate_bytes(raw)
    assert isinstance(violations, list)


def test_valid_message_bytes_validate_clean():
    raw = json.dumps(make_v1_report().to_json()).encode()
    assert validate_bytes(raw) == []


def test_reverse_legacy_missing_field_is_conversion_error():
    message = make_message(MsgType.AUDIT_REQUEST, 1, {
        "request_id": "r", "system_did": "d", "reason": "x", "priority": 1})
    with pytest.raises(ConversionError):
        reverse_legacy(message, COMPLIANCE_MAPPING)
