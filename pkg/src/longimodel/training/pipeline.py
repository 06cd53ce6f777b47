"""End-to-end training pipeline: split, materialize, train, calibrate,
evaluate, build provenance, register, and freeze a monitoring profile.

A draft registry entry is created before the first stage and updated after
each one, so a crashed run leaves an inspectable record marked
``failed:<stage>``. Feature rows are assembled through the repository's
as-of vector path, the same code serving uses at inference time.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from ..domain import Cohort, Digest, canonical_encode, digest
from ..errors import ConfigError, PipelineError
from ..features.repository import FeatureRepository, numeric_value
from ..ingestion.cohort import load_cohort, save_cohort, split_cohort
from ..registry.records import ModelArtifact, ModelSpec, ProvenanceRecord, SpecDraft
from .calibration import fit_platt
from .logreg import Hyperparameters, predict_proba, train_logreg
from .metrics import accuracy_at, auc, brier

if TYPE_CHECKING:
    from ..workspace import Workspace


@dataclass(frozen=True)
class TrainConfig:
    task_id: str
    cohort_id: str
    feature_refs: tuple[tuple[str, int], ...]
    hyperparameters: Hyperparameters = field(default_factory=Hyperparameters)
    algorithm: str = "logreg_sgd"
    split: tuple[float, float] = (0.8, 0.2)
    calibrate: bool = True
    primary_metric: str = "auc_test"
    model_id: str | None = None

    def __post_init__(self) -> None:
        if self.algorithm != "logreg_sgd":
            raise ConfigError(f"unsupported algorithm: {self.algorithm}")
        if abs(self.split[0] + self.split[1] - 1.0) > 1e-9:
            raise ConfigError("split fractions must sum to 1.0")
        object.__setattr__(self, "feature_refs", tuple((n, int(v)) for n, v in self.feature_refs))

    @property
    def effective_model_id(self) -> str:
        return self.model_id or self.task_id

    @classmethod
    def from_doc(cls, doc: Mapping) -> "TrainConfig":
        hp = doc.get("hyperparameters", {})
        return cls(
            task_id=doc["task_id"],
            cohort_id=doc["cohort_id"],
            feature_refs=tuple((n, v) for n, v in doc["feature_refs"]),
            hyperparameters=Hyperparameters(
                learning_rate=hp.get("learning_rate", 0.1),
                epochs=hp.get("epochs", 200),
                l2=hp.get("l2", 0.0),
                batch_size=hp.get("batch_size", 64),
                seed=hp.get("seed", 0),
            ),
            algorithm=doc.get("algorithm", "logreg_sgd"),
            split=tuple(doc.get("split", (0.8, 0.2))),
            calibrate=doc.get("calibrate", True),
            primary_metric=doc.get("primary_metric", "auc_test"),
            model_id=doc.get("model_id"),
        )


@dataclass(frozen=True)
class EvalReport:
    auc_train: float
    auc_test: float
    accuracy_test: float
    brier_test: float
    n_train: int
    n_test: int
    label_prevalence: float

    def metrics(self) -> dict[str, float]:
        return {
            "auc_train": self.auc_train,
            "auc_test": self.auc_test,
            "accuracy_test": self.accuracy_test,
            "brier_test": self.brier_test,
            "n_train": float(self.n_train),
            "n_test": float(self.n_test),
            "label_prevalence": self.label_prevalence,
        }


@dataclass(frozen=True)
class PipelineResult:
    spec: "ModelSpec"
    report: EvalReport
    provenance: ProvenanceRecord
    artifact: ModelArtifact
    draft_id: str

    @property
    def model_id(self) -> str:
        return self.spec.model_id

    @property
    def version(self) -> int:
        return self.spec.version


def assemble_matrix(
    features: FeatureRepository, cohort: Cohort, feature_refs: Sequence[tuple[str, int]]
) -> tuple[np.ndarray, np.ndarray, list[Digest]]:
    """Rows via the shared as-of vector path; returns X, y, and row digests."""
    rows = []
    digests = []
    labels = []
    for row in cohort.rows:
        vector, _ = features.get_vector_asof(row.patient_id, feature_refs, row.index_date, "compute_on_miss")
        rows.append([numeric_value(v) for v in vector.values()])
        digests.append(vector.vector_digest)
        labels.append(row.label)
    return np.asarray(rows, dtype=float), np.asarray(labels, dtype=float), digests


def code_revision() -> str:
    """Opaque revision tag taken from the environment."""
    return os.environ.get("LM_CODE_REVISION", "unversioned")


def run_pipeline(cfg: TrainConfig, ws: "Workspace") -> PipelineResult:
    registry = ws.registry
    features = ws.features
    draft_id = registry.create_draft(cfg.task_id, cfg.effective_model_id)

    def stage(name: str):
        registry.update_draft(draft_id, name)

    def fail(name: str, exc: Exception) -> PipelineError:
        registry.update_draft(draft_id, name, status=f"failed:{name}")
        return PipelineError(name, exc)

    # split
    try:
        stage("split")
        cohort = load_cohort(ws.data_root, cfg.cohort_id)
        train_cohort, test_cohort = split_cohort(cohort, cfg.split, cfg.hyperparameters.seed)
        save_cohort(ws.data_root, train_cohort)
        save_cohort(ws.data_root, test_cohort)
    except Exception as exc:
        raise fail("split", exc) from exc

    # features: materialize per index date, stages parallel across patients
    try:
        stage("features")
        names = [n for n, _ in cfg.feature_refs]
        for name, version in cfg.feature_refs:
            fdef = features.catalog.get(name, version)
            if fdef.value_type != "numeric":
                raise ConfigError(f"feature {name} is categorical; the linear model needs numeric refs")
        by_date: dict = {}
        for row in cohort.rows:
            by_date.setdefault(row.index_date, []).append(row.patient_id)
        for index_date, pids in sorted(by_date.items()):
            timelines = [features.timelines.get(pid) for pid in pids]
            features.materialize(timelines, names, [index_date], max_workers=4)
    except Exception as exc:
        raise fail("features", exc) from exc

    # assemble
    try:
        stage("assemble")
        X_train, y_train, _ = assemble_matrix(features, train_cohort, cfg.feature_refs)
        X_test, y_test, _ = assemble_matrix(features, test_cohort, cfg.feature_refs)
    except Exception as exc:
        raise fail("assemble", exc) from exc

    # train (standardized internally; coefficients folded back to raw scale
    # so the portable artifact applies directly to repository values)
    try:
        stage("train")
        mu = X_train.mean(axis=0)
        sigma = X_train.std(axis=0)
        sigma_safe = np.where(sigma > 0, sigma, 1.0)
        std_intercept, std_coef = train_logreg((X_train - mu) / sigma_safe, y_train, cfg.hyperparameters)
        coef = std_coef / sigma_safe
        intercept = std_intercept - float((std_coef * mu / sigma_safe).sum())
    except Exception as exc:
        raise fail("train", exc) from exc

    # calibrate
    calibration = None
    try:
        if cfg.calibrate:
            stage("calibrate")
            raw_train = X_train @ coef + intercept
            calibration = fit_platt(raw_train, y_train.astype(int))
    except Exception as exc:
        raise fail("calibrate", exc) from exc

    artifact = ModelArtifact(intercept=float(intercept), coefficients=tuple(coef), calibration=calibration)

    # evaluate
    try:
        stage("evaluate")
        probs_train = _probabilities(artifact, X_train)
        probs_test = _probabilities(artifact, X_test)
        report = EvalReport(
            auc_train=auc(probs_train, y_train.astype(int)),
            auc_test=auc(probs_test, y_test.astype(int)),
            accuracy_test=accuracy_at(probs_test, y_test.astype(int), 0.5),
            brier_test=brier(probs_test, y_test.astype(int)),
            n_train=len(y_train),
            n_test=len(y_test),
            label_prevalence=float(np.concatenate([y_train, y_test]).mean()),
        )
    except Exception as exc:
        raise fail("evaluate", exc) from exc

    # provenance
    try:
        stage("provenance")
        feature_defs = []
        for name, version in cfg.feature_refs:
            fdef = features.catalog.get(name, version)
            params_digest = digest(canonical_encode(dict(fdef.params))).hex
            feature_defs.append((name, version, fdef.generator_id, params_digest))
        provenance = ProvenanceRecord(
            train_cohort_digest=train_cohort.data_digest,
            test_cohort_digest=test_cohort.data_digest,
            feature_definitions=tuple(feature_defs),
            algorithm=cfg.algorithm,
            hyperparameters={
                "learning_rate": cfg.hyperparameters.learning_rate,
                "epochs": cfg.hyperparameters.epochs,
                "l2": cfg.hyperparameters.l2,
                "batch_size": cfg.hyperparameters.batch_size,
                "seed": cfg.hyperparameters.seed,
            },
            metrics=report.metrics(),
            code_revision=code_revision(),
            created_at=datetime.now(timezone.utc).isoformat(),
        )
    except Exception as exc:
        raise fail("provenance", exc) from exc

    # register
    try:
        stage("register")
        model_id, version = registry.register_model(
            SpecDraft(
                task_id=cfg.task_id,
                model_id=cfg.effective_model_id,
                feature_refs=cfg.feature_refs,
                metrics=report.metrics(),
            ),
            artifact,
            provenance,
        )
        registry.set_primary_metric(cfg.task_id, cfg.primary_metric)
    except Exception as exc:
        raise fail("register", exc) from exc

    # monitoring profile
    try:
        stage("profile")
        from ..monitoring import ProfileStore, build_profile  # deferred: monitoring imports training.metrics

        profile = build_profile(model_id, version, [n for n, _ in cfg.feature_refs], X_train, probs_train)
        ProfileStore(ws.profiles_dir).put(profile)
    except Exception as exc:
        raise fail("profile", exc) from exc

    registry.update_draft(draft_id, "done", status="succeeded")
    return PipelineResult(registry.get(model_id, version), report, provenance, artifact, draft_id)


def _probabilities(artifact: ModelArtifact, X: np.ndarray) -> np.ndarray:
    raw = X @ np.asarray(artifact.coefficients) + artifact.intercept
    if artifact.calibration is not None:
        a, b = artifact.calibration
        return predict_proba_from_raw(a * raw + b)
    return predict_proba_from_raw(raw)


def predict_proba_from_raw(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
