"""Source normalization into the common data model."""

from datetime import date

import pytest

from longimodel.domain import EventType
from longimodel.errors import MappingError
from longimodel.ingestion.normalize import RawSourceRecord, normalize_to_cdm


def rec(payload, source="claims_v1"):
    return RawSourceRecord(source, payload)


def test_claims_v1_diagnosis_mapping():
    result = normalize_to_cdm([rec({"pid": "p1", "dt": "2020-01-02", "dx": "DX-014"})])
    assert len(result.events) == 1
    e = result.events[0]
    assert (e.patient_id, e.event_date, e.event_type, e.code) == ("p1", date(2020, 1, 2), EventType.DIAGNOSIS, "DX-014")
    assert e.source == "claims_v1"


def test_missing_date_key_rejected_with_reason():
    result = normalize_to_cdm([rec({"pid": "p1", "dx": "DX-014"})])
    assert not result.events
    assert result.rejects[0].reason == "missing_field:dt"


def test_empty_input_is_empty_output():
    result = normalize_to_cdm([])
    assert result.events == ()
    assert result.rejects == ()


def test_unknown_source_raises():
    with pytest.raises(MappingError):
        normalize_to_cdm([rec({"pid": "p1"}, source="mystery_feed")])


def test_output_order_deterministic():
    records = [
        rec({"pid": "p2", "dt": "2020-01-02", "dx": "DX-002"}),
        rec({"pid": "p1", "dt": "2020-03-01", "rx": "RX-001"}),
        rec({"pid": "p1", "dt": "2020-01-02", "dx": "DX-001"}),
    ]
    result = normalize_to_cdm(records)
    keys = [(e.patient_id, e.event_date.isoformat(), e.code) for e in result.events]
    assert keys == sorted(keys)


def test_value_field_parsed_and_invalid_date_rejected():
    good = rec({"pid": "p1", "dt": "2020-01-02", "adm": "ADM-001", "amount": "123.45"})
    bad = rec({"pid": "p1", "dt": "not-a-date", "dx": "DX-001"})
    result = normalize_to_cdm([good, bad])
    assert result.events[0].value == 123.45
    assert result.events[0].event_type == EventType.ADMISSION
    assert result.rejects[0].reason == "invalid_field:dt"


def test_ambiguous_code_fields_rejected():
    result = normalize_to_cdm([rec({"pid": "p1", "dt": "2020-01-02", "dx": "DX-1", "rx": "RX-1"})])
    assert result.rejects[0].reason.startswith("ambiguous_code_fields:")


def test_payload_must_be_non_empty():
    with pytest.raises(MappingError):
        RawSourceRecord("claims_v1", {})
