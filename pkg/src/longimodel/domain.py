"""Shared domain records, canonical serialization, and content digesting.

All records here are immutable values and safe to share across threads.
``canonical_encode`` defines the platform's stable byte representation:
keys in lexicographic order, UTF-8, no insignificant whitespace, dates as
ISO-8601, numbers with no trailing zeros. Digests of canonical bytes are
used as identities throughout (cohorts, vectors, artifacts, provenance).
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, fields, is_dataclass
from datetime import date, datetime
from enum import Enum
from typing import Any, Iterable

from .errors import EncodingError

_HEX64 = re.compile(r"^[0-9a-f]{64}$")


class EventType(str, Enum):
    DIAGNOSIS = "diagnosis"
    PROCEDURE = "procedure"
    ADMISSION = "admission"
    PHARMACY = "pharmacy"


class Sex(str, Enum):
    F = "F"
    M = "M"
    U = "U"


@dataclass(frozen=True)
class Digest:
    """SHA-256 content digest, lowercase hex."""

    hex: str
    algorithm: str = "sha256"

    def __post_init__(self) -> None:
        if self.algorithm != "sha256":
            raise EncodingError(f"unsupported digest algorithm: {self.algorithm}")
        if not _HEX64.match(self.hex):
            raise EncodingError(f"digest must be 64 lowercase hex chars, got {self.hex!r}")

    def __str__(self) -> str:
        return self.hex


@dataclass(frozen=True)
class ClaimEvent:
    """A single dated clinical event from a patient's longitudinal record."""

    patient_id: str
    event_date: date
    event_type: EventType
    code: str
    value: float | None = None
    source: str = "unknown"

    def __post_init__(self) -> None:
        if not self.code:
            raise EncodingError("ClaimEvent.code must be non-empty")
        if not isinstance(self.event_date, date) or isinstance(self.event_date, datetime):
            raise EncodingError("ClaimEvent.event_date must be a calendar date")
        if not isinstance(self.event_type, EventType):
            object.__setattr__(self, "event_type", EventType(self.event_type))


@dataclass(frozen=True)
class PatientTimeline:
    """A patient's events sorted ascending by date (ties keep insertion order)."""

    patient_id: str
    birth_date: date
    sex: Sex
    events: tuple[ClaimEvent, ...]

    @classmethod
    def build(
        cls, patient_id: str, birth_date: date, sex: Sex | str, events: Iterable[ClaimEvent]
    ) -> "PatientTimeline":
        """Construct with a stable sort by event_date."""
        ordered = tuple(sorted(events, key=lambda e: e.event_date))
        return cls(patient_id, birth_date, Sex(sex), ordered)

    def truncated(self, as_of: date) -> "PatientTimeline":
        """Timeline restricted to events dated at or before ``as_of``."""
        kept = tuple(e for e in self.events if e.event_date <= as_of)
        return PatientTimeline(self.patient_id, self.birth_date, self.sex, kept)

    def with_events(self, extra: Iterable[ClaimEvent]) -> "PatientTimeline":
        return PatientTimeline.build(
            self.patient_id, self.birth_date, self.sex, list(self.events) + list(extra)
        )


@dataclass(frozen=True)
class TargetSpec:
    """Definition of the labeled outcome event."""

    event_type: EventType
    code_set: frozenset[str]
    horizon_days: int

    def __post_init__(self) -> None:
        if self.horizon_days < 1:
            raise EncodingError("horizon_days must be >= 1")
        if not self.code_set:
            raise EncodingError("code_set must be non-empty")
        if not isinstance(self.event_type, EventType):
            object.__setattr__(self, "event_type", EventType(self.event_type))
        if not isinstance(self.code_set, frozenset):
            object.__setattr__(self, "code_set", frozenset(self.code_set))


@dataclass(frozen=True)
class CohortRow:
    patient_id: str
    index_date: date
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise EncodingError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class Cohort:
    """A labeled set of (patient, index date) rows with a content digest."""

    cohort_id: str
    target_spec: TargetSpec
    rows: tuple[CohortRow, ...]
    data_digest: Digest

    def __post_init__(self) -> None:
        ids = [r.patient_id for r in self.rows]
        if len(set(ids)) != len(ids):
            raise EncodingError("cohort rows must have unique patient_ids")

    @classmethod
    def build(cls, cohort_id: str, target_spec: TargetSpec, rows: Iterable[CohortRow]) -> "Cohort":
        rows = tuple(rows)
        dg = digest(canonical_encode(_cohort_content(cohort_id, target_spec, rows)))
        return cls(cohort_id, target_spec, rows, dg)

    def verify(self) -> bool:
        """True when data_digest matches a recomputation over the content."""
        recomputed = digest(canonical_encode(_cohort_content(self.cohort_id, self.target_spec, self.rows)))
        return recomputed == self.data_digest


def _cohort_content(cohort_id: str, target_spec: TargetSpec, rows: tuple[CohortRow, ...]) -> dict:
    return {"cohort_id": cohort_id, "target_spec": target_spec, "rows": list(rows)}


def _canonical_number(x: float) -> int | float:
    if not math.isfinite(x):
        raise EncodingError(f"non-finite number cannot be encoded: {x!r}")
    if x == 0.0:
        return 0
    if x == int(x) and abs(x) < 2**53:
        return int(x)
    return x


def _to_plain(obj: Any) -> Any:
    if obj is None or isinstance(obj, (str, bool)):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        return _canonical_number(obj)
    if isinstance(obj, Enum):
        return _to_plain(obj.value)
    if isinstance(obj, datetime):
        return obj.isoformat()
    if isinstance(obj, date):
        return obj.isoformat()
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            if not isinstance(k, str):
                raise EncodingError(f"mapping keys must be strings, got {k!r}")
            out[k] = _to_plain(v)
        return out
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_to_plain(v) for v in obj)
    raise EncodingError(f"unsupported type for canonical encoding: {type(obj).__name__}")


def canonical_encode(record: Any) -> bytes:
    """Deterministic byte encoding of a domain record.

    Identical semantic content yields identical bytes regardless of field
    insertion order, process, or platform.
    """
    plain = _to_plain(record)
    return json.dumps(plain, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def digest(data: bytes) -> Digest:
    """SHA-256 of the byte sequence, lowercase hex."""
    return Digest(hashlib.sha256(data).hexdigest())


def digest_of(record: Any) -> Digest:
    return digest(canonical_encode(record))


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str = ""


@dataclass(frozen=True)
class TimelineReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def has(self, code: str) -> bool:
        return any(v.code == code for v in self.violations)


def validate_timeline(t: PatientTimeline) -> TimelineReport:
    """Check timeline invariants; violations are data, not failures."""
    found: list[Violation] = []
    last = None
    for i, e in enumerate(t.events):
        if e.patient_id != t.patient_id:
            found.append(Violation("patient_id_mismatch", f"event {i} belongs to {e.patient_id}"))
        if e.event_date < t.birth_date:
            found.append(Violation("event_before_birth", f"event {i} on {e.event_date.isoformat()}"))
        if last is not None and e.event_date < last:
            found.append(Violation("unsorted_events", f"event {i} precedes event {i - 1}"))
        last = e.event_date
    return TimelineReport(tuple(found))
