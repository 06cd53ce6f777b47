"""Model registry and content-addressed blob store.

The registry is an append-only event log (``registry.jsonl``); current
state is a fold over the events. Provenance records and model artifacts
live in a CAS under ``artifacts/sha256/<first2>/<digest>`` and are
verified on every read.
"""

from __future__ import annotations

import threading
from datetime import datetime, timezone
from pathlib import Path

from ..domain import Digest, canonical_encode, digest
from ..errors import CorruptionError, IntegrityError, NoModelError, NotFoundError, SpecError, TransitionError
from ..persist import append_jsonl, read_jsonl
from .records import ALLOWED_TRANSITIONS, ModelArtifact, ModelSpec, ProvenanceRecord, SpecDraft, Stage


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class BlobStore:
    """Write-once content-addressed storage keyed by SHA-256.

    Blobs are immutable, so decoded artifacts and provenance records are
    cached in memory by digest after the first verified read.
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self._artifact_cache: dict[str, ModelArtifact] = {}
        self._prov_cache: dict[str, ProvenanceRecord] = {}

    def _path(self, dg: Digest) -> Path:
        return self.root / "sha256" / dg.hex[:2] / dg.hex

    def put_bytes(self, data: bytes) -> Digest:
        dg = digest(data)
        path = self._path(dg)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        return dg

    def get_bytes(self, dg: Digest) -> bytes:
        path = self._path(dg)
        if not path.exists():
            raise NotFoundError(f"unknown blob: {dg.hex}")
        data = path.read_bytes()
        if digest(data) != dg:
            raise CorruptionError(f"blob {dg.hex} failed digest verification")
        return data

    def exists(self, dg: Digest) -> bool:
        return self._path(dg).exists()

    def put_provenance(self, record: ProvenanceRecord) -> Digest:
        """Store content bytes under their own digest; created_at in a sidecar."""
        stored = self.put_bytes(canonical_encode(record.content()))
        if stored != record.record_digest:
            raise IntegrityError(
                f"provenance digest mismatch: computed {stored.hex}, record claims {record.record_digest.hex}"
            )
        meta_path = self._path(stored).with_suffix(".meta")
        if not meta_path.exists():
            import json

            meta_path.write_text(json.dumps({"created_at": record.created_at}), encoding="utf-8")
        return stored

    def get_provenance(self, dg: Digest) -> ProvenanceRecord:
        import json

        cached = self._prov_cache.get(dg.hex)
        if cached is not None:
            return cached
        doc = json.loads(self.get_bytes(dg))  # get_bytes verifies content addressing
        meta_path = self._path(dg).with_suffix(".meta")
        created_at = ""
        if meta_path.exists():
            created_at = json.loads(meta_path.read_text(encoding="utf-8")).get("created_at", "")
        doc["created_at"] = created_at
        doc["record_digest"] = dg.hex
        record = ProvenanceRecord.from_doc(doc)
        if not record.verify():
            raise CorruptionError(f"provenance {dg.hex} failed digest verification")
        self._prov_cache[dg.hex] = record
        return record

    def put_artifact(self, artifact: ModelArtifact) -> Digest:
        return self.put_bytes(canonical_encode(artifact.content()))

    def get_artifact(self, dg: Digest) -> ModelArtifact:
        import json

        cached = self._artifact_cache.get(dg.hex)
        if cached is not None:
            return cached
        artifact = ModelArtifact.from_doc(json.loads(self.get_bytes(dg)))
        self._artifact_cache[dg.hex] = artifact
        return artifact


class ModelRegistry:
    """Append-only registry of model versions, stages, and pipeline drafts."""

    def __init__(self, path: Path | str | None, blobs: BlobStore):
        self._path = Path(path) if path is not None else None
        self.blobs = blobs
        self._specs: dict[tuple[str, int], ModelSpec] = {}
        self._drafts: dict[str, dict] = {}
        self._task_metric: dict[str, str] = {}
        self._audit: list[dict] = []
        self._lock = threading.RLock()
        if self._path is not None:
            for event in read_jsonl(self._path):
                self._fold(event)

    # -- event fold -----------------------------------------------------------

    def _fold(self, event: dict) -> None:
        kind = event["kind"]
        if kind == "register":
            spec = ModelSpec.from_doc(event["spec"])
            self._specs[(spec.model_id, spec.version)] = spec
        elif kind == "stage":
            key = (event["model_id"], event["version"])
            spec = self._specs[key]
            self._specs[key] = spec.with_stage(Stage(event["to"]))
            self._audit.append(event)
        elif kind == "draft":
            self._drafts[event["draft_id"]] = {
                "draft_id": event["draft_id"],
                "task_id": event["task_id"],
                "model_id": event["model_id"],
                "status": "running",
                "stage_reached": "created",
                "created_at": event["at"],
            }
        elif kind == "draft_update":
            d = self._drafts.get(event["draft_id"])
            if d is not None:
                d["stage_reached"] = event["stage"]
                d["status"] = event.get("status", d["status"])
        elif kind == "task_metric":
            self._task_metric[event["task_id"]] = event["metric"]

    def _append(self, event: dict) -> None:
        self._fold(event)
        if self._path is not None:
            append_jsonl(self._path, event)

    # -- registration -----------------------------------------------------------

    def register_model(
        self, draft: SpecDraft, artifact: ModelArtifact, prov: ProvenanceRecord
    ) -> tuple[str, int]:
        """Assign the next version; idempotent on identical content."""
        if len(artifact.coefficients) != len(draft.feature_refs):
            raise SpecError(
                f"artifact has {len(artifact.coefficients)} coefficients for "
                f"{len(draft.feature_refs)} feature refs"
            )
        with self._lock:
            prov_ref = self.blobs.put_provenance(prov)
            if not self.blobs.exists(prov_ref):
                raise IntegrityError(f"provenance {prov_ref.hex} not storable")
            artifact_digest = self.blobs.put_artifact(artifact)

            existing_versions = [v for (m, v) in self._specs if m == draft.model_id]
            for v in sorted(existing_versions):
                spec = self._specs[(draft.model_id, v)]
                if spec.artifact_digest == artifact_digest and spec.provenance_ref == prov_ref:
                    return (draft.model_id, v)

            version = max(existing_versions, default=0) + 1
            spec = ModelSpec(
                task_id=draft.task_id,
                model_id=draft.model_id,
                version=version,
                stage=Stage.NONE,
                serving_handle=f"inproc://{draft.model_id}/{version}",
                feature_refs=tuple(draft.feature_refs),
                metadata_generator_ids=tuple(draft.metadata_generator_ids),
                provenance_ref=prov_ref,
                artifact_digest=artifact_digest,
                metrics=draft.metrics,
                thresholds=draft.thresholds,
                registered_at=_now(),
            )
            self._append({"kind": "register", "spec": spec.to_doc()})
            return (draft.model_id, version)

    # -- stage machine ------------------------------------------------------------

    def transition_stage(self, model_id: str, version: int, to_stage: Stage | str, actor: str = "api") -> ModelSpec:
        to_stage = Stage(to_stage)
        with self._lock:
            key = (model_id, version)
            if key not in self._specs:
                raise NotFoundError(f"unknown model version: {model_id} v{version}")
            current = self._specs[key]
            if (current.stage, to_stage) not in ALLOWED_TRANSITIONS:
                raise TransitionError(
                    f"transition {current.stage.value} -> {to_stage.value} not allowed for {model_id} v{version}"
                )
            if to_stage is Stage.PRODUCTION:
                for (m, v), spec in list(self._specs.items()):
                    if m == model_id and v != version and spec.stage is Stage.PRODUCTION:
                        self._append(
                            {
                                "kind": "stage",
                                "model_id": m,
                                "version": v,
                                "to": Stage.ARCHIVED.value,
                                "actor": f"{actor}:auto-archive",
                                "at": _now(),
                            }
                        )
            self._append(
                {
                    "kind": "stage",
                    "model_id": model_id,
                    "version": version,
                    "to": to_stage.value,
                    "actor": actor,
                    "at": _now(),
                }
            )
            return self._specs[key]

    # -- queries ----------------------------------------------------------------

    def get(self, model_id: str, version: int) -> ModelSpec:
        try:
            return self._specs[(model_id, version)]
        except KeyError:
            raise NotFoundError(f"unknown model version: {model_id} v{version}") from None

    def list_specs(self, task_id: str | None = None) -> list[ModelSpec]:
        specs = [s for s in self._specs.values() if task_id is None or s.task_id == task_id]
        specs.sort(key=lambda s: (s.model_id, s.version))
        return specs

    def versions_of(self, model_id: str) -> list[ModelSpec]:
        return [s for (m, _), s in sorted(self._specs.items()) if m == model_id]

    def set_primary_metric(self, task_id: str, metric: str) -> None:
        with self._lock:
            self._append({"kind": "task_metric", "task_id": task_id, "metric": metric})

    def primary_metric(self, task_id: str) -> str:
        return self._task_metric.get(task_id, "auc_test")

    def get_best_model(self, task_id: str) -> ModelSpec:
        """Highest primary metric among Production specs; tie -> latest registration."""
        metric = self.primary_metric(task_id)
        candidates = [s for s in self._specs.values() if s.task_id == task_id and s.stage is Stage.PRODUCTION]
        if not candidates:
            raise NoModelError(f"no Production model for task: {task_id}")
        return max(candidates, key=lambda s: (s.metrics.get(metric, float("-inf")), s.registered_at))

    def get_lineage(self, provenance_ref: Digest) -> dict:
        """Full verified provenance record plus resolvable children."""
        record = self.blobs.get_provenance(provenance_ref)
        return {
            "record": record,
            "train_cohort_digest": record.train_cohort_digest,
            "test_cohort_digest": record.test_cohort_digest,
            "feature_definitions": list(record.feature_definitions),
        }

    def get_artifact_for(self, model_id: str, version: int) -> ModelArtifact:
        return self.blobs.get_artifact(self.get(model_id, version).artifact_digest)

    # -- pipeline drafts ----------------------------------------------------------

    def create_draft(self, task_id: str, model_id: str) -> str:
        with self._lock:
            draft_id = f"draft-{len(self._drafts) + 1:05d}-{model_id}"
            self._append(
                {"kind": "draft", "draft_id": draft_id, "task_id": task_id, "model_id": model_id, "at": _now()}
            )
            return draft_id

    def update_draft(self, draft_id: str, stage: str, status: str = "running") -> None:
        with self._lock:
            self._append({"kind": "draft_update", "draft_id": draft_id, "stage": stage, "status": status, "at": _now()})

    def get_draft(self, draft_id: str) -> dict:
        try:
            return dict(self._drafts[draft_id])
        except KeyError:
            raise NotFoundError(f"unknown draft: {draft_id}") from None

    def audit_log(self) -> list[dict]:
        return list(self._audit)
