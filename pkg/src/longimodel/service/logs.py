"""Prediction and feedback repositories: append-only request/response history."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Mapping

from ..domain import canonical_encode, digest
from ..errors import NotFoundError
from ..persist import JsonlAppender, read_jsonl


@dataclass(frozen=True)
class PredictionRequest:
    task_id: str
    patient_id: str
    as_of_date: date
    feature_policy: str = "compute_on_miss"
    api_key: str | None = None

    def public_doc(self) -> dict:
        """Request as logged: the api_key never reaches storage."""
        return {
            "task_id": self.task_id,
            "patient_id": self.patient_id,
            "as_of_date": self.as_of_date.isoformat(),
            "feature_policy": self.feature_policy,
        }


@dataclass(frozen=True)
class PredictionRecord:
    request_id: str
    request: dict
    model_id: str
    model_version: int
    vector_digest: str
    raw_score: float
    probability: float
    decision: int
    metadata: Mapping[str, object]
    origin_flags: tuple[str, ...]
    served_at: str
    latency_ms: float

    def to_doc(self) -> dict:
        return {
            "request_id": self.request_id,
            "request": dict(self.request),
            "model_id": self.model_id,
            "model_version": self.model_version,
            "vector_digest": self.vector_digest,
            "raw_score": self.raw_score,
            "probability": self.probability,
            "decision": self.decision,
            "metadata": dict(self.metadata),
            "origin_flags": list(self.origin_flags),
            "served_at": self.served_at,
            "latency_ms": self.latency_ms,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "PredictionRecord":
        return cls(
            request_id=doc["request_id"],
            request=doc["request"],
            model_id=doc["model_id"],
            model_version=doc["model_version"],
            vector_digest=doc["vector_digest"],
            raw_score=doc["raw_score"],
            probability=doc["probability"],
            decision=doc["decision"],
            metadata=doc["metadata"],
            origin_flags=tuple(doc["origin_flags"]),
            served_at=doc["served_at"],
            latency_ms=doc["latency_ms"],
        )


@dataclass(frozen=True)
class FeedbackRecord:
    request_id: str
    observed_outcome: int
    workflow_state: str = ""
    submitted_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def content_digest(self) -> str:
        return digest(
            canonical_encode(
                {
                    "request_id": self.request_id,
                    "observed_outcome": self.observed_outcome,
                    "workflow_state": self.workflow_state,
                }
            )
        ).hex


class PredictionLog:
    """Append-only, gap-free log keyed by request_id."""

    def __init__(self, path: Path | str | None = None):
        self._path = Path(path) if path is not None else None
        self._writer = JsonlAppender(self._path) if self._path is not None else None
        self._records: dict[str, PredictionRecord] = {}
        self._order: list[str] = []
        self._lock = threading.Lock()
        if self._path is not None:
            for doc in read_jsonl(self._path):
                record = PredictionRecord.from_doc(doc)
                self._records[record.request_id] = record
                self._order.append(record.request_id)

    def append(self, record: PredictionRecord) -> None:
        with self._lock:
            if record.request_id in self._records:
                raise NotFoundError(f"duplicate request_id: {record.request_id}")
            self._records[record.request_id] = record
            self._order.append(record.request_id)
            if self._writer is not None:
                self._writer.append(record.to_doc())

    def get(self, request_id: str) -> PredictionRecord:
        try:
            return self._records[request_id]
        except KeyError:
            raise NotFoundError(f"unknown request_id: {request_id}") from None

    def __contains__(self, request_id: str) -> bool:
        return request_id in self._records

    def __len__(self) -> int:
        return len(self._records)

    def recent(self, n: int | None = None, model_id: str | None = None, model_version: int | None = None) -> list[PredictionRecord]:
        records = [self._records[rid] for rid in self._order]
        if model_id is not None:
            records = [r for r in records if r.model_id == model_id]
        if model_version is not None:
            records = [r for r in records if r.model_version == model_version]
        return records[-n:] if n is not None else records


@dataclass(frozen=True)
class FeedbackReceipt:
    request_id: str
    revision: int
    content_digest: str


class FeedbackLog:
    """Feedback versions per request_id; the latest revision wins for monitoring."""

    def __init__(self, path: Path | str | None = None):
        self._path = Path(path) if path is not None else None
        self._writer = JsonlAppender(self._path) if self._path is not None else None
        self._by_request: dict[str, list[FeedbackRecord]] = {}
        self._lock = threading.Lock()
        if self._path is not None:
            for doc in read_jsonl(self._path):
                record = FeedbackRecord(
                    request_id=doc["request_id"],
                    observed_outcome=doc["observed_outcome"],
                    workflow_state=doc.get("workflow_state", ""),
                    submitted_at=doc["submitted_at"],
                )
                self._by_request.setdefault(record.request_id, []).append(record)

    def append(self, record: FeedbackRecord) -> FeedbackReceipt:
        """Idempotent on identical payload; changed payload adds a revision."""
        with self._lock:
            existing = self._by_request.setdefault(record.request_id, [])
            for i, prior in enumerate(existing):
                if prior.content_digest() == record.content_digest():
                    return FeedbackReceipt(record.request_id, i + 1, prior.content_digest())
            existing.append(record)
            if self._writer is not None:
                self._writer.append(
                    {
                        "request_id": record.request_id,
                        "observed_outcome": record.observed_outcome,
                        "workflow_state": record.workflow_state,
                        "submitted_at": record.submitted_at,
                    }
                )
            return FeedbackReceipt(record.request_id, len(existing), record.content_digest())

    def latest(self, request_id: str) -> FeedbackRecord | None:
        records = self._by_request.get(request_id)
        return records[-1] if records else None

    def request_ids(self) -> list[str]:
        return list(self._by_request)

    def recent(self, n: int | None = None) -> list[FeedbackRecord]:
        records = [r[-1] for r in self._by_request.values()]
        records.sort(key=lambda r: r.submitted_at)
        return records[-n:] if n is not None else records

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_request.values())
