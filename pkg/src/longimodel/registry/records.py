"""Registry record types: model specs, artifacts, and provenance."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

from ..domain import Digest, canonical_encode, digest
from ..errors import SpecError


class Stage(str, Enum):
    NONE = "None"
    STAGING = "Staging"
    PRODUCTION = "Production"
    ARCHIVED = "Archived"


ALLOWED_TRANSITIONS: frozenset[tuple[Stage, Stage]] = frozenset(
    {
        (Stage.NONE, Stage.STAGING),
        (Stage.STAGING, Stage.PRODUCTION),
        (Stage.PRODUCTION, Stage.ARCHIVED),
        (Stage.STAGING, Stage.ARCHIVED),
    }
)


@dataclass(frozen=True)
class ModelArtifact:
    """Portable linear model: ordered coefficients aligned to feature_refs."""

    intercept: float
    coefficients: tuple[float, ...]
    link: str = "logit"
    calibration: tuple[float, float] | None = None
    format: str = "linear-v1"

    def __post_init__(self) -> None:
        if self.format != "linear-v1":
            raise SpecError(f"unsupported artifact format: {self.format}")
        if self.link != "logit":
            raise SpecError(f"unsupported link: {self.link}")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.calibration is not None:
            a, b = self.calibration
            object.__setattr__(self, "calibration", (float(a), float(b)))

    def content(self) -> dict:
        return {
            "format": self.format,
            "intercept": self.intercept,
            "coefficients": list(self.coefficients),
            "link": self.link,
            "calibration": list(self.calibration) if self.calibration else None,
        }

    @property
    def artifact_digest(self) -> Digest:
        return digest(canonical_encode(self.content()))

    @classmethod
    def from_doc(cls, doc: Mapping) -> "ModelArtifact":
        cal = doc.get("calibration")
        return cls(
            intercept=doc["intercept"],
            coefficients=tuple(doc["coefficients"]),
            link=doc.get("link", "logit"),
            calibration=(cal[0], cal[1]) if cal else None,
            format=doc.get("format", "linear-v1"),
        )


@dataclass(frozen=True)
class ProvenanceRecord:
    """Immutable content-addressed lineage behind a registered model."""

    train_cohort_digest: Digest
    test_cohort_digest: Digest
    feature_definitions: tuple[tuple[str, int, str, str], ...]  # (name, version, generator_id, params_digest)
    algorithm: str
    hyperparameters: Mapping[str, object]
    metrics: Mapping[str, float]
    code_revision: str
    created_at: str
    record_digest: Digest = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "feature_definitions", tuple(tuple(fd) for fd in self.feature_definitions))
        object.__setattr__(self, "hyperparameters", dict(self.hyperparameters))
        object.__setattr__(self, "metrics", dict(self.metrics))
        expected = digest(canonical_encode(self.content()))
        if self.record_digest is None:
            object.__setattr__(self, "record_digest", expected)

    def content(self) -> dict:
        # created_at stays out of the digest so identical runs produce
        # identical provenance identities.
        return {
            "train_cohort_digest": self.train_cohort_digest.hex,
            "test_cohort_digest": self.test_cohort_digest.hex,
            "feature_definitions": [list(fd) for fd in self.feature_definitions],
            "algorithm": self.algorithm,
            "hyperparameters": dict(self.hyperparameters),
            "metrics": dict(self.metrics),
            "code_revision": self.code_revision,
        }

    def verify(self) -> bool:
        return digest(canonical_encode(self.content())) == self.record_digest

    def to_doc(self) -> dict:
        doc = self.content()
        doc["created_at"] = self.created_at
        doc["record_digest"] = self.record_digest.hex
        return doc

    @classmethod
    def from_doc(cls, doc: Mapping) -> "ProvenanceRecord":
        return cls(
            train_cohort_digest=Digest(doc["train_cohort_digest"]),
            test_cohort_digest=Digest(doc["test_cohort_digest"]),
            feature_definitions=tuple(tuple(fd) for fd in doc["feature_definitions"]),
            algorithm=doc["algorithm"],
            hyperparameters=doc["hyperparameters"],
            metrics=doc["metrics"],
            code_revision=doc["code_revision"],
            created_at=doc["created_at"],
            record_digest=Digest(doc["record_digest"]),
        )


@dataclass(frozen=True)
class ModelSpec:
    """Registry record binding a model version to everything needed to serve it."""

    task_id: str
    model_id: str
    version: int
    stage: Stage
    serving_handle: str
    feature_refs: tuple[tuple[str, int], ...]
    metadata_generator_ids: tuple[str, ...]
    provenance_ref: Digest
    artifact_digest: Digest
    metrics: Mapping[str, float]
    thresholds: Mapping[str, float]
    registered_at: str

    def __post_init__(self) -> None:
        if not self.feature_refs:
            raise SpecError("feature_refs must be non-empty")
        object.__setattr__(self, "feature_refs", tuple((n, int(v)) for n, v in self.feature_refs))
        object.__setattr__(self, "metadata_generator_ids", tuple(self.metadata_generator_ids))
        object.__setattr__(self, "metrics", dict(self.metrics))
        object.__setattr__(self, "thresholds", dict(self.thresholds))
        if not isinstance(self.stage, Stage):
            object.__setattr__(self, "stage", Stage(self.stage))

    def with_stage(self, stage: Stage) -> "ModelSpec":
        return replace(self, stage=stage)

    def to_doc(self) -> dict:
        return {
            "task_id": self.task_id,
            "model_id": self.model_id,
            "version": self.version,
            "stage": self.stage.value,
            "serving_handle": self.serving_handle,
            "feature_refs": [list(r) for r in self.feature_refs],
            "metadata_generator_ids": list(self.metadata_generator_ids),
            "provenance_ref": self.provenance_ref.hex,
            "artifact_digest": self.artifact_digest.hex,
            "metrics": dict(self.metrics),
            "thresholds": dict(self.thresholds),
            "registered_at": self.registered_at,
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> "ModelSpec":
        return cls(
            task_id=doc["task_id"],
            model_id=doc["model_id"],
            version=doc["version"],
            stage=Stage(doc["stage"]),
            serving_handle=doc["serving_handle"],
            feature_refs=tuple((n, v) for n, v in doc["feature_refs"]),
            metadata_generator_ids=tuple(doc["metadata_generator_ids"]),
            provenance_ref=Digest(doc["provenance_ref"]),
            artifact_digest=Digest(doc["artifact_digest"]),
            metrics=doc["metrics"],
            thresholds=doc["thresholds"],
            registered_at=doc["registered_at"],
        )


@dataclass(frozen=True)
class SpecDraft:
    """What a training run submits for registration; version and stage are assigned."""

    task_id: str
    model_id: str
    feature_refs: Sequence[tuple[str, int]]
    metadata_generator_ids: Sequence[str] = ("feature_importance_topk", "provenance_summary")
    metrics: Mapping[str, float] = field(default_factory=dict)
    thresholds: Mapping[str, float] = field(default_factory=lambda: {"decision": 0.5})
