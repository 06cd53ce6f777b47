"""Synthetic longitudinal claims generator.

Produces a deterministic desk-scale population: per-patient event counts are
Poisson around the configured mean, codes are drawn from per-type
vocabularies, and a configurable fraction of patients is injected with a
planted risk pattern: a risk-factor diagnosis followed by an unplanned
admission shortly after the population anchor date. Models trained on
indicator/count features can therefore beat chance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Mapping

import numpy as np

from ..domain import ClaimEvent, EventType, PatientTimeline, Sex
from ..errors import ConfigError

RISK_DIAGNOSIS_CODE = "DX-007"
TARGET_ADMISSION_CODE = "ADM-UNPLANNED"
PLANNED_ADMISSION_CODE = "ADM-PLANNED"

_SOURCE = "synthetic"

_TYPE_PREFIX = {
    EventType.DIAGNOSIS: "DX",
    EventType.PROCEDURE: "PX",
    EventType.PHARMACY: "RX",
    EventType.ADMISSION: "ADM",
}

# Sampling weights for event types in the background stream.
_TYPE_WEIGHTS = {
    EventType.DIAGNOSIS: 0.55,
    EventType.PROCEDURE: 0.18,
    EventType.PHARMACY: 0.22,
    EventType.ADMISSION: 0.05,
}


def _default_vocab() -> dict[EventType, int]:
    return {
        EventType.DIAGNOSIS: 40,
        EventType.PROCEDURE: 25,
        EventType.PHARMACY: 25,
        EventType.ADMISSION: 4,
    }


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    n_patients: int
    mean_events_per_patient: float
    date_range: tuple[date, date]
    code_vocabulary_sizes: Mapping[EventType, int] = field(default_factory=_default_vocab)
    target_injection_rate: float = 0.0
    id_prefix: str = "p"

    def __post_init__(self) -> None:
        start, end = self.date_range
        if start >= end:
            raise ConfigError("date_range start must precede end")
        if not 0.0 <= self.target_injection_rate <= 1.0:
            raise ConfigError("target_injection_rate must be in [0, 1]")
        if self.n_patients < 1:
            raise ConfigError("n_patients must be positive")
        if self.mean_events_per_patient <= 0:
            raise ConfigError("mean_events_per_patient must be positive")
        vocab = {EventType(k): int(v) for k, v in self.code_vocabulary_sizes.items()}
        if any(v < 1 for v in vocab.values()):
            raise ConfigError("vocabulary sizes must be positive")
        object.__setattr__(self, "code_vocabulary_sizes", vocab)


def anchor_date(cfg: GeneratorConfig) -> date:
    """Reference date for the planted scenario: 80% through the date range.

    Injected admissions land within 90 days after this date, so a cohort
    indexed here with a 90-day horizon labels injected patients positive.
    """
    start, end = cfg.date_range
    return start + timedelta(days=int((end - start).days * 0.8))


def _code(event_type: EventType, number: int) -> str:
    return f"{_TYPE_PREFIX[event_type]}-{number:03d}"


def generate_synthetic(cfg: GeneratorConfig) -> list[PatientTimeline]:
    """Deterministic function of the config: same seed, same dataset."""
    rng = np.random.default_rng(cfg.seed)
    start, end = cfg.date_range
    span_days = (end - start).days
    anchor = anchor_date(cfg)

    types = list(_TYPE_WEIGHTS)
    weights = np.array([_TYPE_WEIGHTS[t] for t in types])
    weights = weights / weights.sum()
    vocab = {t: cfg.code_vocabulary_sizes.get(t, 1) for t in types}

    timelines: list[PatientTimeline] = []
    for i in range(cfg.n_patients):
        pid = f"{cfg.id_prefix}{i:06d}"
        birth = start - timedelta(days=int(rng.integers(20 * 365, 85 * 365)))
        sex = Sex.F if rng.random() < 0.52 else Sex.M

        events: list[ClaimEvent] = []
        n_events = int(rng.poisson(cfg.mean_events_per_patient))
        for _ in range(n_events):
            etype = types[int(rng.choice(len(types), p=weights))]
            day = int(rng.integers(0, span_days + 1))
            code = _code(etype, int(rng.integers(1, vocab[etype] + 1)))
            value = None
            if etype in (EventType.ADMISSION, EventType.PROCEDURE):
                value = round(float(np.exp(rng.normal(6.0, 0.8))), 2)
            events.append(ClaimEvent(pid, start + timedelta(days=day), etype, code, value, _SOURCE))

        if rng.random() < cfg.target_injection_rate:
            lead = int(rng.integers(30, 301))
            gap = int(rng.integers(5, 86))
            events.append(
                ClaimEvent(pid, anchor - timedelta(days=lead), EventType.DIAGNOSIS, RISK_DIAGNOSIS_CODE, None, _SOURCE)
            )
            events.append(
                ClaimEvent(
                    pid,
                    anchor + timedelta(days=gap),
                    EventType.ADMISSION,
                    TARGET_ADMISSION_CODE,
                    round(float(np.exp(rng.normal(7.2, 0.6))), 2),
                    _SOURCE,
                )
            )

        timelines.append(PatientTimeline.build(pid, birth, sex, events))
    return timelines
