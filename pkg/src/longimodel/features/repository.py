"""Versioned point-in-time feature value store and as-of vector assembly.

One compute path serves both batch materialization and on-demand serving
(get_vector_asof with compute_on_miss), which is what eliminates
training/inference skew. Values are persisted append-only under
``<data_root>/features/values.jsonl``; staleness marks are events in the
same log and a value is fresh iff it was written after the latest mark for
its feature.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..domain import Digest, PatientTimeline, canonical_encode, digest
from ..errors import FeatureMissError, NotFoundError
from ..persist import JsonlAppender, read_jsonl
from ..timelines import TimelineStore
from .catalog import CatalogReceipt, FeatureCatalog, FeatureDefinition
from .generators import GeneratorRegistry, default_registry

FeatureRef = tuple[str, int]


@dataclass(frozen=True)
class FeatureValue:
    patient_id: str
    feature_name: str
    feature_version: int
    as_of_date: date
    value: object
    computed_at: str

    @property
    def key(self) -> tuple[str, str, int, str]:
        return (self.patient_id, self.feature_name, self.feature_version, self.as_of_date.isoformat())


@dataclass(frozen=True)
class FeatureVector:
    """Ordered feature values for one patient as of one date."""

    patient_id: str
    as_of_date: date
    entries: tuple[tuple[str, int, object], ...]
    vector_digest: Digest

    @classmethod
    def build(cls, patient_id: str, as_of_date: date, entries: Sequence[tuple[str, int, object]]) -> "FeatureVector":
        entries = tuple((n, v, val) for n, v, val in entries)
        dg = digest(
            canonical_encode(
                {
                    "patient_id": patient_id,
                    "as_of_date": as_of_date,
                    "entries": [list(e) for e in entries],
                }
            )
        )
        return cls(patient_id, as_of_date, entries, dg)

    def values(self) -> list[object]:
        return [val for _, _, val in self.entries]


def numeric_value(value: object) -> float:
    """Single imputation rule shared by training and serving: missing -> 0."""
    if value is None:
        return 0.0
    return float(value)  # type: ignore[arg-type]


@dataclass(frozen=True)
class MaterializeReport:
    written: int
    skipped: int
    failures: tuple[tuple[str, str, str], ...]  # (patient_id, feature_name, error)


class FeatureStore:
    """Append-only value log with an in-memory index rebuilt on startup."""

    def __init__(self, path: Path | str | None = None):
        self._path = Path(path) if path is not None else None
        self._writer = JsonlAppender(self._path) if self._path is not None else None
        self._values: dict[tuple[str, str, int, str], tuple[FeatureValue, int]] = {}
        self._mark_seq: dict[str, int] = {}
        self._seq = 0
        self._lock = threading.RLock()
        if self._path is not None:
            for doc in read_jsonl(self._path):
                self._apply(doc, persist=False)

    def _apply(self, doc: dict, persist: bool) -> None:
        self._seq += 1
        if persist and self._writer is not None:
            self._writer.append(doc)
        if doc["kind"] == "value":
            fv = FeatureValue(
                patient_id=doc["patient_id"],
                feature_name=doc["feature_name"],
                feature_version=doc["feature_version"],
                as_of_date=date.fromisoformat(doc["as_of_date"]),
                value=doc["value"],
                computed_at=doc["computed_at"],
            )
            self._values[fv.key] = (fv, self._seq)
        elif doc["kind"] == "stale":
            self._mark_seq[doc["feature_name"]] = self._seq

    def put(self, fv: FeatureValue) -> None:
        with self._lock:
            self._apply(
                {
                    "kind": "value",
                    "patient_id": fv.patient_id,
                    "feature_name": fv.feature_name,
                    "feature_version": fv.feature_version,
                    "as_of_date": fv.as_of_date.isoformat(),
                    "value": fv.value,
                    "computed_at": fv.computed_at,
                },
                persist=True,
            )

    def mark_stale(self, feature_name: str) -> None:
        with self._lock:
            self._apply({"kind": "stale", "feature_name": feature_name}, persist=True)

    def get_fresh(self, patient_id: str, name: str, version: int, as_of: date) -> FeatureValue | None:
        """Stored value, or None when absent or written before the last stale mark."""
        entry = self._values.get((patient_id, name, version, as_of.isoformat()))
        if entry is None:
            return None
        fv, seq = entry
        if seq <= self._mark_seq.get(name, 0):
            return None
        return fv

    def __len__(self) -> int:
        return len(self._values)


class FeatureRepository:
    """Catalog + generators + value store behind one facade."""

    def __init__(
        self,
        catalog: FeatureCatalog | None = None,
        store: FeatureStore | None = None,
        generators: GeneratorRegistry | None = None,
        timelines: TimelineStore | None = None,
    ):
        self.catalog = catalog if catalog is not None else FeatureCatalog()
        self.store = store if store is not None else FeatureStore()
        self.generators = generators if generators is not None else default_registry()
        self.timelines = timelines if timelines is not None else TimelineStore()

    @classmethod
    def open(cls, data_root: Path | str, timelines: TimelineStore | None = None) -> "FeatureRepository":
        data_root = Path(data_root)
        return cls(
            catalog=FeatureCatalog(data_root / "catalog.jsonl"),
            store=FeatureStore(data_root / "features" / "values.jsonl"),
            timelines=timelines if timelines is not None else TimelineStore.load(data_root),
        )

    # -- catalog operations -------------------------------------------------

    def register_feature(self, draft: FeatureDefinition) -> CatalogReceipt:
        return self.catalog.register(draft, known_generators=self.generators.ids())

    def search_catalog(self, query: str) -> list[FeatureDefinition]:
        return self.catalog.search(query)

    def mark_stale(self, feature_name: str) -> set[str]:
        """Flag the feature and all transitive dependents; returns the set."""
        affected = self.catalog.transitive_dependents(feature_name)
        for name in sorted(affected):
            self.store.mark_stale(name)
        return affected

    # -- scheduling ----------------------------------------------------------

    def resolve_execution_order(self, names: Iterable[str]) -> list[list[str]]:
        """Topological stages over the dependency closure of ``names``.

        Within a stage, features are mutually independent. Features sharing
        a group_id are co-staged when no dependency forces them apart.
        """
        closure = self.catalog.closure(names)
        defs = {n: self.catalog.get(n) for n in closure}

        level: dict[str, int] = {}

        def longest_path(name: str, trail: tuple[str, ...]) -> int:
            if name in level:
                return level[name]
            deps = defs[name].dependencies
            lv = 1 + max((longest_path(d, trail + (name,)) for d in deps), default=0)
            level[name] = lv
            return lv

        for n in closure:
            longest_path(n, ())

        reachable = self._reachability(defs)

        groups: dict[str, list[str]] = {}
        for n, d in defs.items():
            if d.group_id:
                groups.setdefault(d.group_id, []).append(n)
        for members in groups.values():
            if len(members) < 2:
                continue
            # Co-stage only antichains: internal dependencies force separation.
            if any(b in reachable[a] for a in members for b in members if a != b):
                continue
            target = max(level[m] for m in members)
            for m in members:
                level[m] = target
        # Re-propagate so every dependent still sits strictly after its deps.
        changed = True
        while changed:
            changed = False
            for n, d in defs.items():
                need = 1 + max((level[dep] for dep in d.dependencies), default=0)
                if level[n] < need:
                    level[n] = need
                    changed = True

        stages: dict[int, list[str]] = {}
        for n, lv in level.items():
            stages.setdefault(lv, []).append(n)
        return [sorted(stages[lv]) for lv in sorted(stages)]

    @staticmethod
    def _reachability(defs: Mapping[str, FeatureDefinition]) -> dict[str, set[str]]:
        """name -> set of names reachable through dependency edges."""
        out: dict[str, set[str]] = {}

        def visit(name: str) -> set[str]:
            if name in out:
                return out[name]
            acc: set[str] = set()
            for dep in defs[name].dependencies:
                if dep in defs:
                    acc.add(dep)
                    acc |= visit(dep)
            out[name] = acc
            return acc

        for n in defs:
            visit(n)
        return out

    # -- value computation (the single code path) ----------------------------

    def _compute(self, timeline: PatientTimeline, fdef: FeatureDefinition, as_of: date, use_store: bool) -> object:
        dep_values: dict[str, object] = {}
        for dep in fdef.dependencies:
            dep_def = self.catalog.get(dep)
            dep_values[dep] = self._value_for(timeline, dep_def, as_of, use_store=use_store)[0]
        generator = self.generators.get(fdef.generator_id)
        return generator.compute(timeline.truncated(as_of), as_of, fdef.params, dep_values)

    def _value_for(
        self, timeline: PatientTimeline, fdef: FeatureDefinition, as_of: date, use_store: bool
    ) -> tuple[object, str]:
        if use_store:
            stored = self.store.get_fresh(timeline.patient_id, fdef.name, fdef.version, as_of)
            if stored is not None:
                return stored.value, "stored"
        return self._compute(timeline, fdef, as_of, use_store=use_store), "computed"

    def compute_value(self, timeline: PatientTimeline, name: str, as_of: date, version: int | None = None) -> object:
        """Pure recomputation, bypassing the store (for audits and tests)."""
        return self._compute(timeline, self.catalog.get(name, version), as_of, use_store=False)

    # -- batch materialization ------------------------------------------------

    def materialize(
        self,
        timelines: Iterable[PatientTimeline],
        names: Iterable[str],
        as_of_dates: Iterable[date],
        max_workers: int = 1,
    ) -> MaterializeReport:
        """Compute and store values for every (patient, feature, as_of).

        Fresh existing values are skipped; stale or missing cells are
        recomputed in dependency order. Per-cell generator failures are
        recorded and the batch continues.
        """
        timelines = list(timelines)
        dates = list(as_of_dates)
        stages = self.resolve_execution_order(names)

        def run_cell(timeline: PatientTimeline, fdef: FeatureDefinition, as_of: date) -> tuple[str, str, str] | str:
            if self.store.get_fresh(timeline.patient_id, fdef.name, fdef.version, as_of) is not None:
                return "skipped"
            try:
                value = self._compute(timeline, fdef, as_of, use_store=True)
            except Exception as exc:  # per-cell isolation, batch continues
                return (timeline.patient_id, fdef.name, str(exc))
            self.store.put(
                FeatureValue(
                    patient_id=timeline.patient_id,
                    feature_name=fdef.name,
                    feature_version=fdef.version,
                    as_of_date=as_of,
                    value=value,
                    computed_at=datetime.now(timezone.utc).isoformat(),
                )
            )
            return "written"

        written = 0
        skipped = 0
        failures: list[tuple[str, str, str]] = []
        for stage in stages:
            stage_defs = [self.catalog.get(n) for n in stage]

            # One unit of parallel work = all of a patient's cells for the stage.
            def run_patient(timeline: PatientTimeline) -> list:
                return [run_cell(timeline, fdef, as_of) for fdef in stage_defs for as_of in dates]

            if max_workers > 1 and len(timelines) > 1:
                with ThreadPoolExecutor(max_workers=max_workers) as pool:
                    outcome_lists = list(pool.map(run_patient, timelines))
            else:
                outcome_lists = [run_patient(t) for t in timelines]
            for outcomes in outcome_lists:
                for outcome in outcomes:
                    if outcome == "written":
                        written += 1
                    elif outcome == "skipped":
                        skipped += 1
                    else:
                        failures.append(outcome)
        return MaterializeReport(written, skipped, tuple(failures))

    # -- as-of vector assembly -------------------------------------------------

    def get_vector_asof(
        self,
        patient_id: str,
        feature_refs: Sequence[FeatureRef],
        as_of_date: date,
        policy: str = "compute_on_miss",
    ) -> tuple[FeatureVector, tuple[str, ...]]:
        """Assemble entries in exactly feature_refs order plus origin flags.

        policy "precomputed_only" raises FeatureMissError naming every
        absent feature; "compute_on_miss" computes misses through the same
        generator path used by materialize, without writing back.
        """
        if policy not in ("precomputed_only", "compute_on_miss"):
            raise NotFoundError(f"unknown feature policy: {policy}")
        refs = [(n, v) for n, v in feature_refs]
        for name, version in refs:
            self.catalog.get(name, version)

        if policy == "precomputed_only":
            missing = [
                name
                for name, version in refs
                if self.store.get_fresh(patient_id, name, version, as_of_date) is None
            ]
            if missing:
                raise FeatureMissError(missing)

        timeline: PatientTimeline | None = None
        entries: list[tuple[str, int, object]] = []
        origins: list[str] = []
        for name, version in refs:
            stored = self.store.get_fresh(patient_id, name, version, as_of_date)
            if stored is not None:
                entries.append((name, version, stored.value))
                origins.append("stored")
                continue
            if timeline is None:
                timeline = self.timelines.get(patient_id)
            value = self._compute(timeline, self.catalog.get(name, version), as_of_date, use_store=True)
            entries.append((name, version, value))
            origins.append("computed")
        return FeatureVector.build(patient_id, as_of_date, entries), tuple(origins)
