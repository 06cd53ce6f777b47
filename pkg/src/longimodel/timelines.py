"""Timeline storage: demographics plus events files composed into PatientTimelines.

File layout under a data root: ``events-<tag>.jsonl`` holds one ClaimEvent
per line, ``patients-<tag>.jsonl`` one demographics row per line. A
TimelineStore loads any number of tags and serves immutable timelines.
"""

from __future__ import annotations

import threading
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator

from .domain import ClaimEvent, EventType, PatientTimeline, Sex
from .errors import NotFoundError
from .persist import read_jsonl, write_jsonl

_DEFAULT_BIRTH = date(1900, 1, 1)


def event_to_doc(e: ClaimEvent) -> dict:
    return {
        "patient_id": e.patient_id,
        "event_date": e.event_date.isoformat(),
        "event_type": e.event_type.value,
        "code": e.code,
        "value": e.value,
        "source": e.source,
    }


def event_from_doc(doc: dict) -> ClaimEvent:
    return ClaimEvent(
        patient_id=doc["patient_id"],
        event_date=date.fromisoformat(doc["event_date"]),
        event_type=EventType(doc["event_type"]),
        code=doc["code"],
        value=doc.get("value"),
        source=doc.get("source", "unknown"),
    )


def save_events(path: Path | str, events: Iterable[ClaimEvent]) -> int:
    return write_jsonl(path, (event_to_doc(e) for e in events))


def load_events(path: Path | str) -> list[ClaimEvent]:
    return [event_from_doc(d) for d in read_jsonl(path)]


def save_timelines(data_root: Path | str, tag: str, timelines: Iterable[PatientTimeline]) -> tuple[Path, Path]:
    """Write events-<tag>.jsonl and patients-<tag>.jsonl for the timelines."""
    data_root = Path(data_root)
    timelines = list(timelines)
    events_path = data_root / f"events-{tag}.jsonl"
    patients_path = data_root / f"patients-{tag}.jsonl"
    save_events(events_path, (e for t in timelines for e in t.events))
    write_jsonl(
        patients_path,
        (
            {"patient_id": t.patient_id, "birth_date": t.birth_date.isoformat(), "sex": t.sex.value}
            for t in timelines
        ),
    )
    return events_path, patients_path


class TimelineStore:
    """In-memory patient_id -> PatientTimeline map with incremental appends."""

    def __init__(self) -> None:
        self._timelines: dict[str, PatientTimeline] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._timelines)

    def __contains__(self, patient_id: str) -> bool:
        return patient_id in self._timelines

    def patient_ids(self) -> list[str]:
        return sorted(self._timelines)

    def get(self, patient_id: str) -> PatientTimeline:
        try:
            return self._timelines[patient_id]
        except KeyError:
            raise NotFoundError(f"unknown patient: {patient_id}") from None

    def all(self) -> Iterator[PatientTimeline]:
        for pid in self.patient_ids():
            yield self._timelines[pid]

    def put(self, timeline: PatientTimeline) -> None:
        with self._lock:
            self._timelines[timeline.patient_id] = timeline

    def add_patient(self, patient_id: str, birth_date: date, sex: Sex | str) -> None:
        with self._lock:
            existing = self._timelines.get(patient_id)
            events = existing.events if existing else ()
            self._timelines[patient_id] = PatientTimeline(patient_id, birth_date, Sex(sex), events)

    def add_events(self, events: Iterable[ClaimEvent]) -> None:
        """Append events, creating placeholder demographics when unseen."""
        by_patient: dict[str, list[ClaimEvent]] = {}
        for e in events:
            by_patient.setdefault(e.patient_id, []).append(e)
        with self._lock:
            for pid, evs in by_patient.items():
                existing = self._timelines.get(pid)
                if existing is None:
                    self._timelines[pid] = PatientTimeline.build(pid, _DEFAULT_BIRTH, Sex.U, evs)
                else:
                    self._timelines[pid] = existing.with_events(evs)

    @classmethod
    def from_timelines(cls, timelines: Iterable[PatientTimeline]) -> "TimelineStore":
        store = cls()
        for t in timelines:
            store.put(t)
        return store

    @classmethod
    def load(cls, data_root: Path | str, tags: Iterable[str] | None = None) -> "TimelineStore":
        """Load all (or the named) tags under a data root."""
        data_root = Path(data_root)
        store = cls()
        if tags is None:
            patient_files = sorted(data_root.glob("patients-*.jsonl"))
            event_files = sorted(data_root.glob("events-*.jsonl"))
        else:
            patient_files = [data_root / f"patients-{t}.jsonl" for t in tags]
            event_files = [data_root / f"events-{t}.jsonl" for t in tags]
        for pf in patient_files:
            for doc in read_jsonl(pf):
                store.add_patient(doc["patient_id"], date.fromisoformat(doc["birth_date"]), doc["sex"])
        for ef in event_files:
            store.add_events(event_from_doc(d) for d in read_jsonl(ef))
        return store
