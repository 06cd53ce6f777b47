"""Model management: registry, provenance store, serving."""

from .records import ALLOWED_TRANSITIONS, ModelArtifact, ModelSpec, ProvenanceRecord, SpecDraft, Stage
from .serving import ScoringClient, runner_app, score_artifact, sigmoid
from .store import BlobStore, ModelRegistry

__all__ = [
    "ALLOWED_TRANSITIONS",
    "BlobStore",
    "ModelArtifact",
    "ModelRegistry",
    "ModelSpec",
    "ProvenanceRecord",
    "ScoringClient",
    "SpecDraft",
    "Stage",
    "runner_app",
    "score_artifact",
    "sigmoid",
]
