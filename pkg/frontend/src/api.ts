/** Thin typed client over the longimodel HTTP API. */

import type { AlertRecord, ConsoleSession, FeedbackEntry, Lineage, ModelSpec, StageName } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`API ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly session: ConsoleSession,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init: RequestInit = {}, authenticated = false): Promise<T> {
    const headers: Record<string, string> = { ...(init.headers as Record<string, string> | undefined) };
    if (init.body !== undefined) headers["Content-Type"] = "application/json";
    if (authenticated) headers["X-API-Key"] = this.session.apiKey;
    let response: Response;
    try {
      response = await this.fetchFn(`${this.session.baseUrl}${path}`, { ...init, headers });
    } catch (err) {
      throw new ApiError(0, err instanceof Error ? err.message : "network failure");
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string; error?: string };
        detail = body.detail ?? body.error ?? detail;
      } catch {
        /* non-JSON error body: keep the status text */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async health(): Promise<{ ok: boolean; patients: number; models: number }> {
    return this.request("/v1/health");
  }

  async listModels(taskId?: string): Promise<ModelSpec[]> {
    const query = taskId ? `?task_id=${encodeURIComponent(taskId)}` : "";
    const body = await this.request<{ models: ModelSpec[] }>(`/v1/models${query}`);
    return body.models;
  }

  async getModel(modelId: string, version: number): Promise<ModelSpec> {
    return this.request(`/v1/models/${encodeURIComponent(modelId)}/versions/${version}`);
  }

  async getLineage(digest: string): Promise<Lineage> {
    return this.request(`/v1/provenance/${digest}`);
  }

  async transitionStage(modelId: string, version: number, to: StageName): Promise<ModelSpec> {
    return this.request(
      `/v1/models/${encodeURIComponent(modelId)}/versions/${version}/stage`,
      { method: "POST", body: JSON.stringify({ to }) },
      true,
    );
  }

  async listAlerts(since?: string): Promise<AlertRecord[]> {
    const query = since ? `?since=${encodeURIComponent(since)}` : "";
    const body = await this.request<{ alerts: AlertRecord[] }>(`/v1/monitor/alerts${query}`);
    return body.alerts;
  }

  async runMonitor(): Promise<AlertRecord[]> {
    const body = await this.request<{ new_alerts: AlertRecord[] }>(
      "/v1/monitor/run",
      { method: "POST" },
      true,
    );
    return body.new_alerts;
  }

  async listFeedback(limit = 50): Promise<FeedbackEntry[]> {
    const body = await this.request<{ feedback: FeedbackEntry[] }>(`/v1/feedback?limit=${limit}`);
    return body.feedback;
  }
}
