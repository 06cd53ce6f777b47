"""Composition root: every durable store wired from one data root."""

from __future__ import annotations

import threading
from pathlib import Path

from .features.repository import FeatureRepository
from .persist import ensure_dir
from .registry.store import BlobStore, ModelRegistry
from .service.logs import FeedbackLog, PredictionLog
from .timelines import TimelineStore


class Workspace:
    """Lazily opens the stores under ``data_root``; construct once per process."""

    def __init__(self, data_root: Path | str):
        self.data_root = Path(data_root)
        ensure_dir(self.data_root)
        self._init_lock = threading.Lock()
        self._timelines: TimelineStore | None = None
        self._features: FeatureRepository | None = None
        self._registry: ModelRegistry | None = None
        self._blobs: BlobStore | None = None
        self._predictions: PredictionLog | None = None
        self._feedback: FeedbackLog | None = None

    @property
    def timelines(self) -> TimelineStore:
        if self._timelines is None:
            with self._init_lock:
                if self._timelines is None:
                    self._timelines = TimelineStore.load(self.data_root)
        return self._timelines

    @property
    def features(self) -> FeatureRepository:
        if self._features is None:
            timelines = self.timelines
            with self._init_lock:
                if self._features is None:
                    self._features = FeatureRepository.open(self.data_root, timelines=timelines)
        return self._features

    @property
    def blobs(self) -> BlobStore:
        if self._blobs is None:
            with self._init_lock:
                if self._blobs is None:
                    self._blobs = BlobStore(self.data_root / "artifacts")
        return self._blobs

    @property
    def registry(self) -> ModelRegistry:
        if self._registry is None:
            blobs = self.blobs
            with self._init_lock:
                if self._registry is None:
                    self._registry = ModelRegistry(self.data_root / "registry.jsonl", blobs)
        return self._registry

    @property
    def predictions(self) -> PredictionLog:
        if self._predictions is None:
            with self._init_lock:
                if self._predictions is None:
                    self._predictions = PredictionLog(self.data_root / "predictions.jsonl")
        return self._predictions

    @property
    def feedback(self) -> FeedbackLog:
        if self._feedback is None:
            with self._init_lock:
                if self._feedback is None:
                    self._feedback = FeedbackLog(self.data_root / "feedback.jsonl")
        return self._feedback

    @property
    def alerts_path(self) -> Path:
        return self.data_root / "alerts.jsonl"

    @property
    def profiles_dir(self) -> Path:
        return ensure_dir(self.data_root / "profiles")
