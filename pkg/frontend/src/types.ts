/** Payload shapes of the longimodel HTTP API, as returned by the server. */

export type StageName = "None" | "Staging" | "Production" | "Archived";

export interface ModelSpec {
  task_id: string;
  model_id: string;
  version: number;
  stage: StageName;
  serving_handle: string;
  feature_refs: [string, number][];
  metadata_generator_ids: string[];
  provenance_ref: string;
  artifact_digest: string;
  metrics: Record<string, number>;
  thresholds: Record<string, number>;
  registered_at: string;
}

export interface ProvenanceDoc {
  train_cohort_digest: string;
  test_cohort_digest: string;
  feature_definitions: [string, number, string, string][];
  algorithm: string;
  hyperparameters: Record<string, unknown>;
  metrics: Record<string, number>;
  code_revision: string;
  created_at: string;
  record_digest: string;
}

export interface Lineage {
  record: ProvenanceDoc;
  train_cohort_digest: string;
  test_cohort_digest: string;
  feature_definitions: [string, number, string, string][];
}

export interface AlertRecord {
  alert_id: string;
  kind: "feature_drift" | "prediction_drift" | "accuracy_drop";
  severity: "warning" | "critical";
  model_id: string;
  model_version: number;
  metric_name: string;
  value: number;
  threshold: number;
  window: Record<string, unknown>;
  raised_at: string;
  suggested_action: string;
}

export interface FeedbackEntry {
  request_id: string;
  observed_outcome: number;
  workflow_state: string;
  submitted_at: string;
}

export interface ConsoleSession {
  baseUrl: string;
  /** Held in memory only; never rendered or logged. */
  apiKey: string;
  pollMs: number;
}
