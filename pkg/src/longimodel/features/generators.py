"""Feature generators: pure functions over a timeline as of a date.

A generator sees only events dated at or before the as-of date (the
repository truncates the timeline before calling compute), so every
produced value is point-in-time safe by construction.
"""

from __future__ import annotations

from datetime import date, timedelta
from typing import Mapping, Protocol

from ..domain import EventType, PatientTimeline, Sex
from ..errors import ConfigError, NotFoundError


class Generator(Protocol):
    generator_id: str

    def compute(
        self,
        timeline: PatientTimeline,
        as_of_date: date,
        params: Mapping[str, object],
        dependency_values: Mapping[str, object],
    ) -> object: ...


class AgeAtIndex:
    """floor((as_of - birth_date) / 365.25) in whole years."""

    generator_id = "age_at_index"

    def compute(self, timeline, as_of_date, params, dependency_values):
        days = (as_of_date - timeline.birth_date).days
        return int(days / 365.25)


class SexIndicator:
    """1 if sex is F else 0."""

    generator_id = "sex_indicator"

    def compute(self, timeline, as_of_date, params, dependency_values):
        return 1 if timeline.sex == Sex.F else 0


class EventCountWindow:
    """Count of matching events with date in (as_of - window_days, as_of].

    params: event_type (required), window_days (required), codes
    (optional list; None counts every code of the type).
    """

    generator_id = "event_count_window"

    def compute(self, timeline, as_of_date, params, dependency_values):
        etype = EventType(params["event_type"])
        window_days = int(params["window_days"])
        codes = params.get("codes")
        code_set = frozenset(codes) if codes else None
        lower = as_of_date - timedelta(days=window_days)
        n = 0
        for e in timeline.events:
            if e.event_type != etype:
                continue
            if code_set is not None and e.code not in code_set:
                continue
            if lower < e.event_date <= as_of_date:
                n += 1
        return n


class CodeIndicator:
    """1 if any event carries the code at or before as_of, else 0."""

    generator_id = "code_indicator"

    def compute(self, timeline, as_of_date, params, dependency_values):
        code = params["code"]
        for e in timeline.events:
            if e.code == code and e.event_date <= as_of_date:
                return 1
        return 0


class WeightedSum:
    """Linear combination of dependency values; params.weights aligns by name."""

    generator_id = "weighted_sum"

    def compute(self, timeline, as_of_date, params, dependency_values):
        weights = params.get("weights") or {}
        total = 0.0
        for name, value in dependency_values.items():
            w = float(weights.get(name, 1.0))
            total += w * float(value if value is not None else 0.0)
        return total


class ThresholdFlag:
    """1 if the single dependency exceeds params.threshold, else 0."""

    generator_id = "threshold_flag"

    def compute(self, timeline, as_of_date, params, dependency_values):
        if len(dependency_values) != 1:
            raise ConfigError("threshold_flag requires exactly one dependency")
        (value,) = dependency_values.values()
        return 1 if float(value if value is not None else 0.0) > float(params["threshold"]) else 0


class GeneratorRegistry:
    def __init__(self) -> None:
        self._generators: dict[str, Generator] = {}

    def register(self, generator: Generator) -> None:
        self._generators[generator.generator_id] = generator

    def get(self, generator_id: str) -> Generator:
        try:
            return self._generators[generator_id]
        except KeyError:
            raise NotFoundError(f"unknown generator: {generator_id}") from None

    def ids(self) -> list[str]:
        return sorted(self._generators)

    def __contains__(self, generator_id: str) -> bool:
        return generator_id in self._generators


def default_registry() -> GeneratorRegistry:
    reg = GeneratorRegistry()
    for gen in (AgeAtIndex(), SexIndicator(), EventCountWindow(), CodeIndicator(), WeightedSum(), ThresholdFlag()):
        reg.register(gen)
    return reg
