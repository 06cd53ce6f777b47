"""HTTP API over the inference service, registry, provenance, and alerts.

Mutating routes require the ``X-API-Key`` header. Error mapping: auth 401,
missing entities 404, feature misses and disallowed transitions 409,
serving failures 502.
"""

from __future__ import annotations

import threading
from datetime import date

from fastapi import FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..domain import Digest
from ..errors import (
    AuthError,
    FeatureMissError,
    LongimodelError,
    NoModelError,
    NotFoundError,
    ServingError,
    TransitionError,
)
from ..monitoring import Monitor, MonitoringConfig
from ..workspace import Workspace
from .core import InferenceService
from .logs import FeedbackRecord, PredictionRequest


class PredictBody(BaseModel):
    task_id: str
    patient_id: str
    as_of_date: date
    feature_policy: str = "compute_on_miss"
    api_key: str | None = None


class FeedbackBody(BaseModel):
    request_id: str
    observed_outcome: int = Field(ge=0, le=1)
    workflow_state: str = ""


class StageBody(BaseModel):
    to: str


def create_app(service: InferenceService, monitor: Monitor) -> FastAPI:
    app = FastAPI(title="longimodel", version="0.1.0")
    ws = service.ws

    @app.exception_handler(LongimodelError)
    def domain_error(request: Request, exc: LongimodelError):
        status = 400
        headers = {}
        if isinstance(exc, AuthError):
            status = 401
        elif isinstance(exc, (NoModelError, NotFoundError)):
            status = 404
        elif isinstance(exc, (FeatureMissError, TransitionError)):
            status = 409
        elif isinstance(exc, ServingError):
            status = 502
            if exc.retry_after_s is not None:
                headers["Retry-After"] = str(exc.retry_after_s)
        body = {"error": type(exc).__name__, "detail": str(exc)}
        if isinstance(exc, FeatureMissError):
            body["missing"] = exc.missing
        return JSONResponse(status_code=status, content=body, headers=headers)

    def require_key(x_api_key: str | None) -> None:
        service.check_key(x_api_key)

    @app.get("/v1/health")
    def health():
        return {"ok": True, "patients": len(ws.timelines), "models": len(ws.registry.list_specs())}

    @app.post("/v1/predict")
    def predict(body: PredictBody, x_api_key: str | None = Header(default=None)):
        req = PredictionRequest(
            task_id=body.task_id,
            patient_id=body.patient_id,
            as_of_date=body.as_of_date,
            feature_policy=body.feature_policy,
            api_key=x_api_key if x_api_key is not None else body.api_key,
        )
        return service.predict(req).to_doc()

    @app.post("/v1/feedback")
    def feedback(body: FeedbackBody, x_api_key: str | None = Header(default=None)):
        require_key(x_api_key)
        receipt = service.submit_feedback(
            FeedbackRecord(
                request_id=body.request_id,
                observed_outcome=body.observed_outcome,
                workflow_state=body.workflow_state,
            )
        )
        return {
            "request_id": receipt.request_id,
            "revision": receipt.revision,
            "content_digest": receipt.content_digest,
        }

    @app.get("/v1/predictions/{request_id}")
    def get_prediction(request_id: str):
        return service.get_prediction(request_id).to_doc()

    @app.get("/v1/feedback")
    def list_feedback(limit: int = Query(default=50, ge=1, le=1000)):
        records = ws.feedback.recent(limit)
        return {
            "feedback": [
                {
                    "request_id": r.request_id,
                    "observed_outcome": r.observed_outcome,
                    "workflow_state": r.workflow_state,
                    "submitted_at": r.submitted_at,
                }
                for r in records
            ]
        }

    @app.get("/v1/models")
    def list_models(task_id: str | None = None):
        return {"models": [s.to_doc() for s in ws.registry.list_specs(task_id)]}

    @app.get("/v1/models/{model_id}/versions/{version}")
    def get_model(model_id: str, version: int):
        return ws.registry.get(model_id, version).to_doc()

    @app.post("/v1/models/{model_id}/versions/{version}/stage")
    def transition(model_id: str, version: int, body: StageBody, x_api_key: str | None = Header(default=None)):
        require_key(x_api_key)
        spec = ws.registry.transition_stage(model_id, version, body.to, actor="api")
        return spec.to_doc()

    @app.get("/v1/provenance/{digest_hex}")
    def provenance(digest_hex: str):
        lineage = ws.registry.get_lineage(Digest(digest_hex))
        record = lineage["record"]
        return {
            "record": record.to_doc(),
            "train_cohort_digest": record.train_cohort_digest.hex,
            "test_cohort_digest": record.test_cohort_digest.hex,
            "feature_definitions": [list(fd) for fd in record.feature_definitions],
        }

    @app.get("/v1/monitor/alerts")
    def alerts(since: str | None = None):
        return {"alerts": [a.to_doc() for a in monitor.alerts.list(since)]}

    @app.post("/v1/monitor/run")
    def run_monitor(x_api_key: str | None = Header(default=None)):
        require_key(x_api_key)
        new_alerts = monitor.evaluate_and_notify()
        return {"new_alerts": [a.to_doc() for a in new_alerts]}

    return app


def build_service(ws: Workspace, api_key: str, monitoring_cfg: MonitoringConfig | None = None):
    """Wire service + monitor over one workspace; returns (service, monitor, app)."""
    from ..monitoring import AlertLog, ProfileStore

    service = InferenceService(ws, api_key)
    monitor = Monitor(
        registry=ws.registry,
        features=ws.features,
        predictions=ws.predictions,
        feedback=ws.feedback,
        alerts=AlertLog(ws.alerts_path),
        profiles=ProfileStore(ws.profiles_dir),
        cfg=monitoring_cfg or MonitoringConfig(),
    )
    return service, monitor, create_app(service, monitor)


class MonitorJob:
    """Background thread running evaluate_and_notify on an interval."""

    def __init__(self, monitor: Monitor, interval_s: float):
        self.monitor = monitor
        self.interval_s = interval_s
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        if self.interval_s <= 0:
            return
        self._thread = threading.Thread(target=self._run, daemon=True, name="monitor-job")
        self._thread.start()

    def _run(self) -> None:
        while not self._stop.wait(self.interval_s):
            try:
                self.monitor.evaluate_and_notify()
            except Exception:
                pass

    def stop(self) -> None:
        self._stop.set()
