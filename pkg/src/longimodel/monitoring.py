"""Continuous model evaluation: drift statistics, retrospective accuracy, alerts.

Drift is measured by the population stability index over 10 equal-frequency
bins frozen from training data. Severity: warning for psi in [0.1, 0.2),
critical at or above 0.2. Retrospective accuracy joins logged predictions
to the latest feedback per request and raises a critical alert when the
rolling AUC falls more than a margin below the registered test AUC.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import MetricError, NotFoundError, ProfileError
from .features.repository import FeatureRepository, numeric_value
from .persist import TailReader, append_jsonl
from .registry.store import ModelRegistry
from .registry.records import ModelSpec, Stage
from .service.logs import FeedbackLog, PredictionLog, PredictionRecord
from .training.metrics import accuracy_at, auc

PSI_FLOOR = 1e-4
N_BINS = 10
SUGGESTED_ACTION = "review for retraining"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class MonitoringConfig:
    psi_warning: float = 0.1
    psi_critical: float = 0.2
    min_drift_window: int = 100
    drift_window: int = 500
    retro_window: int = 500
    min_feedback: int = 30
    auc_drop_margin: float = 0.05
    interval_s: float = 60.0


def floor_proportions(p: Sequence[float], floor: float = PSI_FLOOR) -> np.ndarray:
    """Clamp to the floor and renormalize to sum 1."""
    arr = np.maximum(np.asarray(p, dtype=float), floor)
    return arr / arr.sum()


def psi(reference: Sequence[float], current: Sequence[float]) -> float:
    """Population stability index: sum((q - p) * ln(q / p)) over bins."""
    p = np.asarray(reference, dtype=float)
    q = np.asarray(current, dtype=float)
    if p.shape != q.shape:
        raise MetricError(f"bin count mismatch: {p.shape} vs {q.shape}")
    p = floor_proportions(p)
    q = floor_proportions(q)
    return float(np.sum((q - p) * np.log(q / p)))


@dataclass(frozen=True)
class Histogram:
    """Equal-frequency bins: interior edges plus floored proportions."""

    edges: tuple[float, ...]
    proportions: tuple[float, ...]

    @classmethod
    def fit(cls, values: Sequence[float], n_bins: int = N_BINS) -> "Histogram":
        arr = np.asarray(values, dtype=float)
        quantiles = np.quantile(arr, np.linspace(0, 1, n_bins + 1)[1:-1])
        edges = tuple(float(e) for e in np.unique(quantiles))
        props = floor_proportions(cls._raw_proportions(edges, arr))
        return cls(edges, tuple(float(x) for x in props))

    @staticmethod
    def _raw_proportions(edges: tuple[float, ...], values: np.ndarray) -> np.ndarray:
        # searchsorted with right closure: bin i holds (edge[i-1], edge[i]]
        idx = np.searchsorted(np.asarray(edges), values, side="left")
        counts = np.bincount(idx, minlength=len(edges) + 1).astype(float)
        return counts / max(len(values), 1)

    def proportions_of(self, values: Sequence[float]) -> np.ndarray:
        return floor_proportions(self._raw_proportions(self.edges, np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class ReferenceProfile:
    model_id: str
    version: int
    feature_names: tuple[str, ...]
    feature_histograms: tuple[Histogram, ...]
    score_histogram: Histogram
    feature_stds: tuple[float, ...]
    created_at: str

    def to_doc(self) -> dict:
        return {
            "model_id": self.model_id,
            "version": self.version,
            "feature_names": list(self.feature_names),
            "feature_histograms": [
                {"edges": list(h.edges), "proportions": list(h.proportions)} for h in self.feature_histograms
            ],
            "score_histogram": {
                "edges": list(self.score_histogram.edges),
                "proportions": list(self.score_histogram.proportions),
            },
            "feature_stds": list(self.feature_stds),
            "created_at": self.created_at,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ReferenceProfile":
        return cls(
            model_id=doc["model_id"],
            version=doc["version"],
            feature_names=tuple(doc["feature_names"]),
            feature_histograms=tuple(
                Histogram(tuple(h["edges"]), tuple(h["proportions"])) for h in doc["feature_histograms"]
            ),
            score_histogram=Histogram(
                tuple(doc["score_histogram"]["edges"]), tuple(doc["score_histogram"]["proportions"])
            ),
            feature_stds=tuple(doc["feature_stds"]),
            created_at=doc["created_at"],
        )


def build_profile(
    model_id: str, version: int, feature_names: Sequence[str], X, scores
) -> ReferenceProfile:
    """Freeze training-time distributions for later drift comparison."""
    X = np.asarray(X, dtype=float)
    return ReferenceProfile(
        model_id=model_id,
        version=version,
        feature_names=tuple(feature_names),
        feature_histograms=tuple(Histogram.fit(X[:, j]) for j in range(X.shape[1])),
        score_histogram=Histogram.fit(np.asarray(scores, dtype=float)),
        feature_stds=tuple(float(s) for s in X.std(axis=0)),
        created_at=_now(),
    )


class ProfileStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)

    def _path(self, model_id: str, version: int) -> Path:
        return self.root / f"{model_id}-v{version}.json"

    def put(self, profile: ReferenceProfile) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self._path(profile.model_id, profile.version)
        path.write_text(json.dumps(profile.to_doc()), encoding="utf-8")
        return path

    def get(self, model_id: str, version: int) -> ReferenceProfile:
        path = self._path(model_id, version)
        if not path.exists():
            raise ProfileError(f"no reference profile for {model_id} v{version}")
        return ReferenceProfile.from_doc(json.loads(path.read_text(encoding="utf-8")))

    def exists(self, model_id: str, version: int) -> bool:
        return self._path(model_id, version).exists()


@dataclass(frozen=True)
class Alert:
    alert_id: str
    kind: str  # feature_drift | prediction_drift | accuracy_drop
    severity: str  # warning | critical
    model_id: str
    model_version: int
    metric_name: str
    value: float
    threshold: float
    window: dict
    raised_at: str
    suggested_action: str = SUGGESTED_ACTION

    def to_doc(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "kind": self.kind,
            "severity": self.severity,
            "model_id": self.model_id,
            "model_version": self.model_version,
            "metric_name": self.metric_name,
            "value": self.value,
            "threshold": self.threshold,
            "window": dict(self.window),
            "raised_at": self.raised_at,
            "suggested_action": self.suggested_action,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Alert":
        return cls(
            alert_id=doc["alert_id"],
            kind=doc["kind"],
            severity=doc["severity"],
            model_id=doc["model_id"],
            model_version=doc["model_version"],
            metric_name=doc["metric_name"],
            value=doc["value"],
            threshold=doc["threshold"],
            window=doc["window"],
            raised_at=doc["raised_at"],
            suggested_action=doc.get("suggested_action", SUGGESTED_ACTION),
        )

    def dedup_key(self) -> tuple[str, str, int, str]:
        return (self.kind, self.model_id, self.model_version, self.metric_name)


class AlertLog:
    """Append-only alert store; duplicates suppressed while unresolved.

    Another process may also append; reads tail-follow the file.
    """

    def __init__(self, path: Path | str):
        self._path = Path(path)
        self._reader = TailReader(self._path)
        self._alerts: list[Alert] = []
        self._resolved: set[str] = set()
        self._lock = threading.Lock()

    def _refresh(self) -> None:
        for doc in self._reader.poll():
            if doc.get("kind") == "resolve":
                self._resolved.add(doc["alert_id"])
            else:
                self._alerts.append(Alert.from_doc(doc))

    def _open_keys(self) -> set[tuple]:
        return {a.dedup_key() for a in self._alerts if a.alert_id not in self._resolved}

    def raise_alerts(self, candidates: Iterable[Alert]) -> list[Alert]:
        """Append candidates whose (kind, model, metric) has no unresolved alert."""
        with self._lock:
            self._refresh()
            open_keys = self._open_keys()
            appended: list[Alert] = []
            for alert in candidates:
                if alert.dedup_key() in open_keys:
                    continue
                append_jsonl(self._path, alert.to_doc())
                self._alerts.append(alert)
                open_keys.add(alert.dedup_key())
                appended.append(alert)
            # keep the tail reader in sync with our own writes
            self._reader.poll()
            return appended

    def resolve(self, alert_id: str) -> None:
        with self._lock:
            self._refresh()
            if all(a.alert_id != alert_id for a in self._alerts):
                raise NotFoundError(f"unknown alert: {alert_id}")
            append_jsonl(self._path, {"kind": "resolve", "alert_id": alert_id})
            self._resolved.add(alert_id)
            self._reader.poll()

    def list(self, since: str | None = None) -> list[Alert]:
        with self._lock:
            self._refresh()
            alerts = list(self._alerts)
        if since is not None:
            alerts = [a for a in alerts if a.raised_at >= since]
        return alerts


@dataclass(frozen=True)
class DriftEntry:
    name: str  # feature name or "score"
    psi: float
    severity: str  # none | warning | critical


@dataclass(frozen=True)
class RetroReport:
    status: str  # ok | insufficient
    rolling_auc: float | None
    rolling_accuracy: float | None
    n: int
    reason: str = ""


def severity_for(value: float, cfg: MonitoringConfig) -> str:
    if value >= cfg.psi_critical:
        return "critical"
    if value >= cfg.psi_warning:
        return "warning"
    return "none"


def drift_entries(
    profile: ReferenceProfile, X, scores, cfg: MonitoringConfig | None = None
) -> list[DriftEntry]:
    """Per-feature and score PSI against the reference profile."""
    cfg = cfg or MonitoringConfig()
    X = np.asarray(X, dtype=float)
    entries: list[DriftEntry] = []
    for j, name in enumerate(profile.feature_names):
        hist = profile.feature_histograms[j]
        value = psi(hist.proportions, hist.proportions_of(X[:, j]))
        entries.append(DriftEntry(name, value, severity_for(value, cfg)))
    score_hist = profile.score_histogram
    value = psi(score_hist.proportions, score_hist.proportions_of(np.asarray(scores, dtype=float)))
    entries.append(DriftEntry("score", value, severity_for(value, cfg)))
    return entries


class Monitor:
    """Periodic evaluation over every Production model."""

    def __init__(
        self,
        registry: ModelRegistry,
        features: FeatureRepository,
        predictions: PredictionLog,
        feedback: FeedbackLog,
        alerts: AlertLog,
        profiles: ProfileStore,
        cfg: MonitoringConfig | None = None,
    ):
        self.registry = registry
        self.features = features
        self.predictions = predictions
        self.feedback = feedback
        self.alerts = alerts
        self.profiles = profiles
        self.cfg = cfg or MonitoringConfig()

    # -- drift ------------------------------------------------------------------

    def _window_matrix(self, spec: ModelSpec, window: list[PredictionRecord]) -> tuple[np.ndarray, np.ndarray]:
        rows = []
        for record in window:
            req = record.request
            vector, _ = self.features.get_vector_asof(
                req["patient_id"], spec.feature_refs, date.fromisoformat(req["as_of_date"]), "compute_on_miss"
            )
            rows.append([numeric_value(v) for v in vector.values()])
        scores = np.array([r.probability for r in window], dtype=float)
        return np.asarray(rows, dtype=float), scores

    def detect_drift(self, model_id: str, version: int, window: list[PredictionRecord] | None = None) -> list[DriftEntry]:
        """PSI per feature and score; critical entries raise alerts."""
        spec = self.registry.get(model_id, version)
        if not self.profiles.exists(model_id, version):
            raise ProfileError(f"no reference profile for {model_id} v{version}")
        profile = self.profiles.get(model_id, version)
        if window is None:
            window = self.predictions.recent(self.cfg.drift_window, model_id=model_id, model_version=version)
        if len(window) < self.cfg.min_drift_window:
            raise ProfileError(
                f"drift window has {len(window)} records, below minimum {self.cfg.min_drift_window}"
            )
        X, scores = self._window_matrix(spec, window)
        entries = drift_entries(profile, X, scores, self.cfg)
        self._raise_drift_alerts(spec, entries, len(window))
        return entries

    def _raise_drift_alerts(self, spec: ModelSpec, entries: list[DriftEntry], window_n: int) -> list[Alert]:
        candidates = []
        for entry in entries:
            if entry.severity != "critical":
                continue
            candidates.append(
                Alert(
                    alert_id=str(uuid.uuid4()),
                    kind="prediction_drift" if entry.name == "score" else "feature_drift",
                    severity="critical",
                    model_id=spec.model_id,
                    model_version=spec.version,
                    metric_name=entry.name,
                    value=entry.psi,
                    threshold=self.cfg.psi_critical,
                    window={"n": window_n, "kind": "recent_predictions"},
                    raised_at=_now(),
                )
            )
        return self.alerts.raise_alerts(candidates)

    # -- retrospective accuracy ----------------------------------------------------

    def retrospective_accuracy(self, model_id: str, version: int) -> RetroReport:
        spec = self.registry.get(model_id, version)
        joined: list[tuple[float, int]] = []
        for record in self.predictions.recent(model_id=model_id, model_version=version):
            fb = self.feedback.latest(record.request_id)
            if fb is not None:
                joined.append((record.probability, fb.observed_outcome))
        joined = joined[-self.cfg.retro_window :]
        n = len(joined)
        if n < self.cfg.min_feedback:
            return RetroReport("insufficient", None, None, n, f"need >= {self.cfg.min_feedback} feedback-joined predictions")
        probs = [p for p, _ in joined]
        outcomes = [o for _, o in joined]
        if len(set(outcomes)) < 2:
            return RetroReport("insufficient", None, None, n, "both outcomes must be present")
        rolling_auc = auc(probs, outcomes)
        rolling_acc = accuracy_at(probs, outcomes, spec.thresholds.get("decision", 0.5))
        registered = spec.metrics.get("auc_test")
        if registered is not None and rolling_auc < registered - self.cfg.auc_drop_margin:
            self.alerts.raise_alerts(
                [
                    Alert(
                        alert_id=str(uuid.uuid4()),
                        kind="accuracy_drop",
                        severity="critical",
                        model_id=model_id,
                        model_version=version,
                        metric_name="rolling_auc",
                        value=rolling_auc,
                        threshold=registered - self.cfg.auc_drop_margin,
                        window={"n": n, "kind": "feedback_joined"},
                        raised_at=_now(),
                    )
                ]
            )
        return RetroReport("ok", rolling_auc, rolling_acc, n)

    # -- the periodic job ------------------------------------------------------------

    def evaluate_and_notify(self) -> list[Alert]:
        """Run both detectors for every Production model; errors stay per-model."""
        before = {a.alert_id for a in self.alerts.list()}
        for spec in self.registry.list_specs():
            if spec.stage is not Stage.PRODUCTION:
                continue
            try:
                self.detect_drift(spec.model_id, spec.version)
            except Exception:  # per-model isolation
                pass
            try:
                self.retrospective_accuracy(spec.model_id, spec.version)
            except Exception:  # per-model isolation
                pass
        return [a for a in self.alerts.list() if a.alert_id not in before]
