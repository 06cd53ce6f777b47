"""Model serving: linear artifact evaluation behind inproc and http handles.

The wire contract for remote runners: POST <handle>/score with body
``{"entries": [[name, version, value], ...]}`` returning
``{"raw": number, "probability": number}``; 422 on dimension mismatch.
"""

from __future__ import annotations

import math
from urllib.parse import urlparse

import httpx

from ..errors import NotFoundError, ServingError, SpecError
from ..features.repository import FeatureVector, numeric_value
from .records import ModelArtifact
from .store import ModelRegistry


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def score_artifact(artifact: ModelArtifact, values: list[object]) -> tuple[float, float]:
    """Raw linear score and (optionally Platt-calibrated) probability."""
    if len(values) != len(artifact.coefficients):
        raise SpecError(
            f"vector of length {len(values)} against {len(artifact.coefficients)} coefficients"
        )
    raw = artifact.intercept + sum(c * numeric_value(v) for c, v in zip(artifact.coefficients, values))
    if artifact.calibration is not None:
        a, b = artifact.calibration
        probability = sigmoid(a * raw + b)
    else:
        probability = sigmoid(raw)
    return raw, probability


class ScoringClient:
    """Resolves serving handles. inproc handles read artifacts from the registry."""

    def __init__(self, registry: ModelRegistry | None = None, http_timeout_s: float = 2.0):
        self._registry = registry
        self._timeout = http_timeout_s

    def score(self, handle: str, vector: FeatureVector) -> tuple[float, float]:
        scheme = urlparse(handle).scheme
        if scheme == "inproc":
            return self._score_inproc(handle, vector)
        if scheme in ("http", "https"):
            return self._score_http(handle, vector)
        raise ServingError(f"unsupported serving handle scheme: {handle}")

    def _score_inproc(self, handle: str, vector: FeatureVector) -> tuple[float, float]:
        if self._registry is None:
            raise ServingError("inproc scoring requires a registry")
        parsed = urlparse(handle)
        model_id = parsed.netloc
        version_part = parsed.path.strip("/")
        if not model_id or not version_part.isdigit():
            raise ServingError(f"malformed inproc handle: {handle}")
        try:
            artifact = self._registry.get_artifact_for(model_id, int(version_part))
        except NotFoundError as exc:
            raise ServingError(str(exc)) from exc
        return score_artifact(artifact, vector.values())

    def _score_http(self, handle: str, vector: FeatureVector) -> tuple[float, float]:
        body = {"entries": [list(e) for e in vector.entries]}
        try:
            response = httpx.post(f"{handle.rstrip('/')}/score", json=body, timeout=self._timeout)
        except httpx.HTTPError as exc:
            raise ServingError(f"serving handle unreachable: {handle} ({exc})", retry_after_s=1.0) from exc
        if response.status_code == 422:
            raise SpecError(f"remote runner rejected vector dimensions: {response.text}")
        if response.status_code != 200:
            raise ServingError(
                f"serving handle returned {response.status_code}: {response.text}", retry_after_s=1.0
            )
        payload = response.json()
        return float(payload["raw"]), float(payload["probability"])


def runner_app(artifact: ModelArtifact):
    """Minimal micro-service wrapping one artifact behind the wire contract."""
    from fastapi import FastAPI
    from fastapi.responses import JSONResponse

    app = FastAPI(title="model-runner")

    @app.post("/score")
    def score(body: dict):
        entries = body.get("entries", [])
        if len(entries) != len(artifact.coefficients):
            return JSONResponse(
                status_code=422,
                content={"error": f"expected {len(artifact.coefficients)} entries, got {len(entries)}"},
            )
        values = [e[2] for e in entries]
        raw, probability = score_artifact(artifact, values)
        return {"raw": raw, "probability": probability}

    return app
