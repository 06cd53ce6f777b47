"""Normalization of raw source records into the common data model.

Each source registers a mapping that names the payload keys carrying the
patient id, the event date, and the event code. A payload carries exactly
one code key; the key determines the event type.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Mapping

from ..domain import ClaimEvent, EventType
from ..errors import MappingError


@dataclass(frozen=True)
class RawSourceRecord:
    source_name: str
    payload: Mapping[str, str]

    def __post_init__(self) -> None:
        if not self.payload:
            raise MappingError("payload must be non-empty")


@dataclass(frozen=True)
class SourceMapping:
    """Field mapping for one upstream source."""

    source_name: str
    patient_id_key: str
    date_key: str
    code_keys: Mapping[str, EventType]
    value_key: str | None = None


@dataclass(frozen=True)
class Reject:
    record: RawSourceRecord
    reason: str


@dataclass(frozen=True)
class NormalizeResult:
    events: tuple[ClaimEvent, ...]
    rejects: tuple[Reject, ...]


_DEFAULT_MAPPINGS: dict[str, SourceMapping] = {}


def register_source_mapping(mapping: SourceMapping) -> None:
    _DEFAULT_MAPPINGS[mapping.source_name] = mapping


register_source_mapping(
    SourceMapping(
        source_name="claims_v1",
        patient_id_key="pid",
        date_key="dt",
        code_keys={
            "dx": EventType.DIAGNOSIS,
            "px": EventType.PROCEDURE,
            "rx": EventType.PHARMACY,
            "adm": EventType.ADMISSION,
        },
        value_key="amount",
    )
)


def _convert(record: RawSourceRecord, mapping: SourceMapping) -> ClaimEvent | Reject:
    payload = record.payload
    pid = payload.get(mapping.patient_id_key)
    if not pid:
        return Reject(record, f"missing_field:{mapping.patient_id_key}")
    raw_date = payload.get(mapping.date_key)
    if not raw_date:
        return Reject(record, f"missing_field:{mapping.date_key}")
    try:
        event_date = date.fromisoformat(raw_date)
    except ValueError:
        return Reject(record, f"invalid_field:{mapping.date_key}")

    present = [k for k in mapping.code_keys if payload.get(k)]
    if not present:
        expected = "|".join(sorted(mapping.code_keys))
        return Reject(record, f"missing_field:{expected}")
    if len(present) > 1:
        return Reject(record, f"ambiguous_code_fields:{','.join(sorted(present))}")
    code_key = present[0]

    value = None
    if mapping.value_key and payload.get(mapping.value_key):
        try:
            value = float(payload[mapping.value_key])
        except ValueError:
            return Reject(record, f"invalid_field:{mapping.value_key}")

    return ClaimEvent(
        patient_id=pid,
        event_date=event_date,
        event_type=mapping.code_keys[code_key],
        code=payload[code_key],
        value=value,
        source=record.source_name,
    )


def normalize_to_cdm(
    records: Iterable[RawSourceRecord],
    mappings: Mapping[str, SourceMapping] | None = None,
) -> NormalizeResult:
    """One ClaimEvent per convertible record; deterministic output order."""
    mappings = dict(_DEFAULT_MAPPINGS) if mappings is None else dict(mappings)
    events: list[ClaimEvent] = []
    rejects: list[Reject] = []
    for record in records:
        mapping = mappings.get(record.source_name)
        if mapping is None:
            raise MappingError(f"unknown source: {record.source_name}")
        result = _convert(record, mapping)
        if isinstance(result, Reject):
            rejects.append(result)
        else:
            events.append(result)
    events.sort(key=lambda e: (e.patient_id, e.event_date, e.code))
    return NormalizeResult(tuple(events), tuple(rejects))
