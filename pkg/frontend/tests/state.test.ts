/** Store flows against a scripted client: promotion, acknowledgments, drift table. */

import { describe, expect, it, vi } from "vitest";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { ApiClient, ApiError } from "../src/api.js";
import {
  ConsoleStore,
  allowedTargets,
  latestDriftByMetric,
  memoryAcks,
  sortedTimeline,
} from "../src/state.js";
import type { AlertRecord, ModelSpec } from "../src/types.js";

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(__dirname, "fixtures", name), "utf-8")) as T;
}

const models = fixture<{ models: ModelSpec[] }>("models.json").models;
const alerts = fixture<{ alerts: AlertRecord[] }>("alerts.json").alerts;

function scriptedClient(overrides: Partial<Record<keyof ApiClient, unknown>> = {}): ApiClient {
  const base = {
    listModels: vi.fn(async () => models),
    listAlerts: vi.fn(async () => alerts),
    listFeedback: vi.fn(async () => []),
    getLineage: vi.fn(async () => fixture("lineage.json")),
    transitionStage: vi.fn(async () => models[0]),
    runMonitor: vi.fn(async () => []),
  };
  return Object.assign(Object.create(ApiClient.prototype), base, overrides) as ApiClient;
}

describe("promotion flow", () => {
  const staging = models.find((m) => m.stage === "Staging")!;

  it("begin identifies the production version that would be archived", async () => {
    const store = new ConsoleStore(scriptedClient());
    await store.refreshModels();
    store.beginPromote(staging, "Production");
    expect(store.state.promote?.archives?.stage).toBe("Production");
    expect(store.state.promote?.archives?.model_id).toBe(staging.model_id);
  });

  it("cancel issues no API call", async () => {
    const client = scriptedClient();
    const store = new ConsoleStore(client);
    await store.refreshModels();
    store.beginPromote(staging, "Production");
    store.cancelPromote();
    expect(store.state.promote).toBeNull();
    expect(client.transitionStage).not.toHaveBeenCalled();
  });

  it("confirm posts the transition and re-renders from a fresh listing", async () => {
    const client = scriptedClient();
    const store = new ConsoleStore(client);
    await store.refreshModels();
    store.beginPromote(staging, "Production");
    await store.confirmPromote();
    expect(client.transitionStage).toHaveBeenCalledWith(staging.model_id, staging.version, "Production");
    expect(store.state.promote).toBeNull();
    expect(client.listModels).toHaveBeenCalledTimes(2);
  });

  it("a server 4xx keeps the modal open and shows the server reason", async () => {
    const client = scriptedClient({
      transitionStage: vi.fn(async () => {
        throw new ApiError(409, "transition None -> Production not allowed for admit-risk v2");
      }),
    });
    const store = new ConsoleStore(client);
    await store.refreshModels();
    store.beginPromote(staging, "Production");
    await store.confirmPromote();
    expect(store.state.promote?.error).toContain("not allowed");
    expect(store.state.promote?.busy).toBe(false);
  });
});

describe("acknowledgments", () => {
  it("persist through the injected storage", async () => {
    const acks = memoryAcks();
    const store = new ConsoleStore(scriptedClient(), acks);
    await store.refreshAlerts();
    const id = alerts[0]!.alert_id;
    store.acknowledge(id);
    expect(acks.load()).toContain(id);

    const reloaded = new ConsoleStore(scriptedClient(), acks);
    expect(reloaded.state.acknowledged.has(id)).toBe(true);
  });
});

describe("failure handling", () => {
  it("network failure raises the api-down banner state", async () => {
    const client = scriptedClient({
      listModels: vi.fn(async () => {
        throw new ApiError(0, "fetch failed");
      }),
    });
    const store = new ConsoleStore(client);
    await store.refreshModels();
    expect(store.state.apiDown).toBe(true);
  });

  it("http errors surface the server detail without marking the api down", async () => {
    const client = scriptedClient({
      listAlerts: vi.fn(async () => {
        throw new ApiError(404, "unknown model version");
      }),
    });
    const store = new ConsoleStore(client);
    await store.refreshAlerts();
    expect(store.state.apiDown).toBe(false);
    expect(store.state.lastError).toContain("unknown model version");
  });
});

describe("alert shaping (arrangement only, no computation)", () => {
  it("timeline sorts newest first", () => {
    const timeline = sortedTimeline(alerts);
    for (let i = 1; i < timeline.length; i++) {
      expect(timeline[i - 1]!.raised_at >= timeline[i]!.raised_at).toBe(true);
    }
  });

  it("drift table keeps the latest record per metric, values untouched", () => {
    const drift = latestDriftByMetric(alerts);
    const seen = new Set(drift.map((a) => `${a.model_id}/${a.model_version}/${a.metric_name}`));
    expect(seen.size).toBe(drift.length);
    for (const row of drift) {
      const original = alerts.find((a) => a.alert_id === row.alert_id)!;
      expect(row.value).toBe(original.value);
      expect(row.threshold).toBe(original.threshold);
    }
  });

  it("accuracy_drop alerts stay out of the drift table", () => {
    const synthetic: AlertRecord = { ...alerts[0]!, alert_id: "x", kind: "accuracy_drop", metric_name: "rolling_auc" };
    const drift = latestDriftByMetric([...alerts, synthetic]);
    expect(drift.find((a) => a.alert_id === "x")).toBeUndefined();
  });
});

describe("stage targets", () => {
  it("mirror the registry's allowed transition set", () => {
    const at = (stage: ModelSpec["stage"]) => allowedTargets({ ...models[0]!, stage });
    expect(at("None")).toEqual(["Staging"]);
    expect(at("Staging")).toEqual(["Production", "Archived"]);
    expect(at("Production")).toEqual(["Archived"]);
    expect(at("Archived")).toEqual([]);
  });
});
