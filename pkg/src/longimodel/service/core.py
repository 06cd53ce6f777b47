"""The inference framework: request flow, prediction logging, feedback capture.

predict() executes the canonical sequence: resolve the best Production
model, read its spec, assemble the as-of feature vector under the request
policy, score through the serving handle, run the spec's metadata
generators, and append the record to the prediction log before returning.
"""

from __future__ import annotations

import time
import uuid
from datetime import datetime, timezone
from typing import TYPE_CHECKING, Callable, Mapping

from ..errors import AuthError, NotFoundError
from ..features.repository import FeatureVector, numeric_value
from ..registry.records import ModelSpec
from ..registry.serving import ScoringClient
from .logs import FeedbackReceipt, FeedbackRecord, PredictionRecord, PredictionRequest

if TYPE_CHECKING:
    from ..workspace import Workspace


class MetadataContext:
    def __init__(self, spec: ModelSpec, vector: FeatureVector, raw: float, probability: float, registry):
        self.spec = spec
        self.vector = vector
        self.raw = raw
        self.probability = probability
        self.registry = registry


def feature_importance_topk(ctx: MetadataContext, k: int = 5) -> dict:
    """The k largest |coefficient * value| contributions, signed."""
    artifact = ctx.registry.get_artifact_for(ctx.spec.model_id, ctx.spec.version)
    contributions = []
    for (name, _, value), coef in zip(ctx.vector.entries, artifact.coefficients):
        contributions.append({"feature": name, "contribution": coef * numeric_value(value)})
    contributions.sort(key=lambda c: abs(c["contribution"]), reverse=True)
    return {"top_contributions": contributions[:k]}


def provenance_summary(ctx: MetadataContext) -> dict:
    return {
        "provenance_ref": ctx.spec.provenance_ref.hex,
        "algorithm": ctx.registry.blobs.get_provenance(ctx.spec.provenance_ref).algorithm,
        "metrics": dict(ctx.spec.metrics),
    }


DEFAULT_METADATA_GENERATORS: dict[str, Callable[[MetadataContext], dict]] = {
    "feature_importance_topk": feature_importance_topk,
    "provenance_summary": provenance_summary,
}


class InferenceService:
    def __init__(
        self,
        ws: "Workspace",
        api_key: str,
        metadata_generators: Mapping[str, Callable[[MetadataContext], dict]] | None = None,
    ):
        self.ws = ws
        self.api_key = api_key
        self.scoring = ScoringClient(ws.registry)
        self.metadata_generators = dict(metadata_generators or DEFAULT_METADATA_GENERATORS)

    def check_key(self, api_key: str | None) -> None:
        if api_key != self.api_key:
            raise AuthError("missing or invalid API key")

    def predict(self, req: PredictionRequest) -> PredictionRecord:
        started = time.perf_counter()
        self.check_key(req.api_key)

        spec = self.ws.registry.get_best_model(req.task_id)
        vector, origins = self.ws.features.get_vector_asof(
            req.patient_id, spec.feature_refs, req.as_of_date, req.feature_policy
        )
        raw, probability = self.scoring.score(spec.serving_handle, vector)
        threshold = spec.thresholds.get("decision", 0.5)
        decision = 1 if probability > threshold else 0

        ctx = MetadataContext(spec, vector, raw, probability, self.ws.registry)
        metadata = {}
        for generator_id in spec.metadata_generator_ids:
            generator = self.metadata_generators.get(generator_id)
            if generator is not None:
                metadata[generator_id] = generator(ctx)

        record = PredictionRecord(
            request_id=str(uuid.uuid4()),
            request=req.public_doc(),
            model_id=spec.model_id,
            model_version=spec.version,
            vector_digest=vector.vector_digest.hex,
            raw_score=raw,
            probability=probability,
            decision=decision,
            metadata=metadata,
            origin_flags=origins,
            served_at=datetime.now(timezone.utc).isoformat(),
            latency_ms=(time.perf_counter() - started) * 1000.0,
        )
        self.ws.predictions.append(record)
        return record

    def submit_feedback(self, fb: FeedbackRecord) -> FeedbackReceipt:
        if fb.request_id not in self.ws.predictions:
            raise NotFoundError(f"unknown request_id: {fb.request_id}")
        return self.ws.feedback.append(fb)

    def get_prediction(self, request_id: str) -> PredictionRecord:
        return self.ws.predictions.get(request_id)
