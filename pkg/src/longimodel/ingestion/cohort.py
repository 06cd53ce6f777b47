"""Cohort construction and splitting.

The label window is lower-exclusive, upper-inclusive: label = 1 iff a
target event occurs with event_date in ``(index, index + horizon]``. The
index event can therefore never label itself, and nothing at or before the
index date influences the label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from ..domain import Cohort, CohortRow, EventType, PatientTimeline, TargetSpec
from ..errors import ConfigError, CorruptionError, EmptyCohortError, NotFoundError
from ..persist import read_jsonl


@dataclass(frozen=True)
class FirstEventRule:
    """Index at the patient's first event matching type and code set."""

    event_type: EventType
    code_set: frozenset[str]

    def __post_init__(self) -> None:
        if not isinstance(self.event_type, EventType):
            object.__setattr__(self, "event_type", EventType(self.event_type))
        object.__setattr__(self, "code_set", frozenset(self.code_set))

    def index_date(self, t: PatientTimeline) -> date | None:
        for e in t.events:
            if e.event_type == self.event_type and e.code in self.code_set:
                return e.event_date
        return None


@dataclass(frozen=True)
class FixedDateRule:
    """Index every patient at the same calendar date."""

    index_date_value: date

    def index_date(self, t: PatientTimeline) -> date | None:
        return self.index_date_value


IndexRule = Union[FirstEventRule, FixedDateRule]


def label_for(t: PatientTimeline, target: TargetSpec, index: date) -> int:
    upper = index + timedelta(days=target.horizon_days)
    for e in t.events:
        if (
            e.event_type == target.event_type
            and e.code in target.code_set
            and index < e.event_date <= upper
        ):
            return 1
    return 0


def build_cohort(
    timelines: Iterable[PatientTimeline],
    target: TargetSpec,
    index_rule: IndexRule,
    cohort_id: str,
) -> Cohort:
    rows: list[CohortRow] = []
    for t in timelines:
        index = index_rule.index_date(t)
        if index is None:
            continue
        rows.append(CohortRow(t.patient_id, index, label_for(t, target, index)))
    if not rows:
        raise EmptyCohortError("no patient yielded an index date")
    rows.sort(key=lambda r: r.patient_id)
    return Cohort.build(cohort_id, target, rows)


def split_cohort(c: Cohort, fractions: tuple[float, float], seed: int) -> tuple[Cohort, Cohort]:
    """Disjoint patient-level split, deterministic in seed."""
    train_frac, test_frac = fractions
    if train_frac <= 0 or test_frac <= 0:
        raise ConfigError("split fractions must be positive")
    if abs(train_frac + test_frac - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1.0, got {train_frac + test_frac}")

    rows = list(c.rows)
    order = np.random.default_rng(seed).permutation(len(rows))
    n_train = int(round(len(rows) * train_frac))
    n_train = min(max(n_train, 1), len(rows) - 1)
    train_rows = sorted((rows[i] for i in order[:n_train]), key=lambda r: r.patient_id)
    test_rows = sorted((rows[i] for i in order[n_train:]), key=lambda r: r.patient_id)
    train = Cohort.build(f"{c.cohort_id}-train", c.target_spec, train_rows)
    test = Cohort.build(f"{c.cohort_id}-test", c.target_spec, test_rows)
    return train, test


def save_cohort(data_root: Path | str, cohort: Cohort) -> Path:
    """Write cohort-<id>.jsonl plus a sidecar cohort-<id>.digest."""
    data_root = Path(data_root)
    data_root.mkdir(parents=True, exist_ok=True)
    path = data_root / f"cohort-{cohort.cohort_id}.jsonl"
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "kind": "cohort",
            "cohort_id": cohort.cohort_id,
            "target_spec": {
                "event_type": cohort.target_spec.event_type.value,
                "code_set": sorted(cohort.target_spec.code_set),
                "horizon_days": cohort.target_spec.horizon_days,
            },
            "n_rows": len(cohort.rows),
        }
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for r in cohort.rows:
            fh.write(
                json.dumps(
                    {"patient_id": r.patient_id, "index_date": r.index_date.isoformat(), "label": r.label},
                    ensure_ascii=False,
                )
                + "\n"
            )
    (data_root / f"cohort-{cohort.cohort_id}.digest").write_text(cohort.data_digest.hex + "\n", encoding="utf-8")
    return path


def load_cohort(data_root: Path | str, cohort_id: str) -> Cohort:
    """Load and verify a stored cohort against its sidecar digest."""
    data_root = Path(data_root)
    path = data_root / f"cohort-{cohort_id}.jsonl"
    if not path.exists():
        raise NotFoundError(f"unknown cohort: {cohort_id}")
    docs = list(read_jsonl(path))
    header, row_docs = docs[0], docs[1:]
    target = TargetSpec(
        event_type=EventType(header["target_spec"]["event_type"]),
        code_set=frozenset(header["target_spec"]["code_set"]),
        horizon_days=header["target_spec"]["horizon_days"],
    )
    rows = [CohortRow(d["patient_id"], date.fromisoformat(d["index_date"]), d["label"]) for d in row_docs]
    cohort = Cohort.build(cohort_id, target, rows)
    digest_path = data_root / f"cohort-{cohort_id}.digest"
    if digest_path.exists():
        recorded = digest_path.read_text(encoding="utf-8").strip()
        if recorded != cohort.data_digest.hex:
            raise CorruptionError(f"cohort {cohort_id} digest mismatch: {recorded} != {cohort.data_digest.hex}")
    return cohort
