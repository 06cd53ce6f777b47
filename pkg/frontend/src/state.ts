/** Console state container and the flows that mutate it.
 *
 * All domain numbers pass through untouched from API responses; the store
 * only arranges them for display.
 */

import { ApiClient, ApiError } from "./api.js";
import type { AlertRecord, FeedbackEntry, Lineage, ModelSpec, StageName } from "./types.js";

export type Route = { view: "models" } | { view: "model"; modelId: string; version: number } | { view: "alerts" };

export interface PromoteFlow {
  spec: ModelSpec;
  to: StageName;
  /** The currently-Production version this promotion would archive, if any. */
  archives: ModelSpec | null;
  error: string | null;
  busy: boolean;
}

export interface ConsoleState {
  route: Route;
  models: ModelSpec[];
  lineage: Record<string, Lineage>;
  lineageOpen: string | null;
  alerts: AlertRecord[];
  feedback: FeedbackEntry[];
  acknowledged: Set<string>;
  promote: PromoteFlow | null;
  apiDown: boolean;
  lastError: string | null;
  lastSync: string | null;
}

export function initialState(): ConsoleState {
  return {
    route: { view: "models" },
    models: [],
    lineage: {},
    lineageOpen: null,
    alerts: [],
    feedback: [],
    acknowledged: new Set(),
    promote: null,
    apiDown: false,
    lastError: null,
    lastSync: null,
  };
}

export interface AckStorage {
  load(): string[];
  save(ids: string[]): void;
}

export function localStorageAcks(storage: Pick<Storage, "getItem" | "setItem">): AckStorage {
  const KEY = "longimodel-console.acknowledged";
  return {
    load(): string[] {
      try {
        return JSON.parse(storage.getItem(KEY) ?? "[]") as string[];
      } catch {
        return [];
      }
    },
    save(ids: string[]): void {
      storage.setItem(KEY, JSON.stringify(ids));
    },
  };
}

export function memoryAcks(): AckStorage {
  let ids: string[] = [];
  return {
    load: () => ids,
    save(next: string[]) {
      ids = next;
    },
  };
}

type Listener = (state: ConsoleState) => void;

export class ConsoleStore {
  state: ConsoleState;
  private listeners: Listener[] = [];
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly acks: AckStorage = memoryAcks(),
  ) {
    this.state = initialState();
    this.state.acknowledged = new Set(this.acks.load());
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  update(mutate: (state: ConsoleState) => void): void {
    mutate(this.state);
    this.emit();
  }

  // -- data refresh ---------------------------------------------------------

  async refreshModels(): Promise<void> {
    try {
      const models = await this.client.listModels();
      this.update((s) => {
        s.models = models;
        s.apiDown = false;
        s.lastSync = new Date().toISOString();
      });
    } catch (err) {
      this.markFailure(err);
    }
  }

  async refreshAlerts(): Promise<void> {
    try {
      const alerts = await this.client.listAlerts();
      this.update((s) => {
        s.alerts = alerts;
        s.apiDown = false;
        s.lastSync = new Date().toISOString();
      });
    } catch (err) {
      this.markFailure(err);
    }
  }

  async refreshFeedback(): Promise<void> {
    try {
      const feedback = await this.client.listFeedback();
      this.update((s) => {
        s.feedback = feedback;
      });
    } catch (err) {
      this.markFailure(err);
    }
  }

  async openLineage(digest: string): Promise<void> {
    if (!this.state.lineage[digest]) {
      try {
        const lineage = await this.client.getLineage(digest);
        this.update((s) => {
          s.lineage[digest] = lineage;
        });
      } catch (err) {
        this.markFailure(err);
        return;
      }
    }
    this.update((s) => {
      s.lineageOpen = digest;
    });
  }

  closeLineage(): void {
    this.update((s) => {
      s.lineageOpen = null;
    });
  }

  private markFailure(err: unknown): void {
    this.update((s) => {
      s.apiDown = err instanceof ApiError && err.status === 0;
      s.lastError = err instanceof Error ? err.message : String(err);
    });
  }

  // -- promotion flow ---------------------------------------------------------

  beginPromote(spec: ModelSpec, to: StageName): void {
    const archives =
      to === "Production"
        ? (this.state.models.find(
            (m) => m.model_id === spec.model_id && m.version !== spec.version && m.stage === "Production",
          ) ?? null)
        : null;
    this.update((s) => {
      s.promote = { spec, to, archives, error: null, busy: false };
    });
  }

  /** Cancel issues no API call; the modal simply closes. */
  cancelPromote(): void {
    this.update((s) => {
      s.promote = null;
    });
  }

  async confirmPromote(): Promise<void> {
    const flow = this.state.promote;
    if (!flow || flow.busy) return;
    this.update((s) => {
      if (s.promote) s.promote.busy = true;
    });
    try {
      await this.client.transitionStage(flow.spec.model_id, flow.spec.version, flow.to);
      this.update((s) => {
        s.promote = null;
      });
      await this.refreshModels();
    } catch (err) {
      const detail = err instanceof ApiError ? err.detail : err instanceof Error ? err.message : String(err);
      this.update((s) => {
        if (s.promote) {
          s.promote.error = detail;
          s.promote.busy = false;
        }
      });
    }
  }

  // -- alerts ------------------------------------------------------------------

  acknowledge(alertId: string): void {
    this.update((s) => {
      s.acknowledged.add(alertId);
    });
    this.acks.save([...this.state.acknowledged]);
  }

  async runMonitorNow(): Promise<void> {
    try {
      await this.client.runMonitor();
      await this.refreshAlerts();
    } catch (err) {
      this.markFailure(err);
    }
  }

  // -- polling -------------------------------------------------------------------

  startPolling(intervalMs: number): void {
    this.stopPolling();
    this.pollTimer = setInterval(() => {
      void this.refreshAlerts();
    }, intervalMs);
  }

  stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }
}

/** Latest drift value per (model, version, metric): the "current PSI" table. */
export function latestDriftByMetric(alerts: AlertRecord[]): AlertRecord[] {
  const byKey = new Map<string, AlertRecord>();
  for (const alert of alerts) {
    if (alert.kind !== "feature_drift" && alert.kind !== "prediction_drift") continue;
    const key = `${alert.model_id}/${alert.model_version}/${alert.metric_name}`;
    const existing = byKey.get(key);
    if (!existing || alert.raised_at >= existing.raised_at) byKey.set(key, alert);
  }
  return [...byKey.values()].sort((a, b) => b.value - a.value);
}

export function sortedTimeline(alerts: AlertRecord[]): AlertRecord[] {
  return [...alerts].sort((a, b) => (a.raised_at < b.raised_at ? 1 : -1));
}

/** Stage moves the registry permits from the spec's current stage. */
export function allowedTargets(spec: ModelSpec): StageName[] {
  switch (spec.stage) {
    case "None":
      return ["Staging"];
    case "Staging":
      return ["Production", "Archived"];
    case "Production":
      return ["Archived"];
    default:
      return [];
  }
}
