/** Console round trip against a live primary instance.
 *
 * Orchestrated by scripts/e2e.sh, which prepares a data root (two model
 * versions: v1 Production with drifted traffic logged, v2 Staging), boots
 * the server, and exports CONSOLE_E2E_BASE_URL / CONSOLE_E2E_API_KEY.
 */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ConsoleStore, memoryAcks } from "../src/state.js";
import type { ConsoleSession } from "../src/types.js";

const baseUrl = process.env["CONSOLE_E2E_BASE_URL"];
const apiKey = process.env["CONSOLE_E2E_API_KEY"] ?? "e2e-key";
const POLL_MS = 1000;

const liveDescribe = baseUrl ? describe : describe.skip;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

liveDescribe("console against a live primary", () => {
  const session: ConsoleSession = { baseUrl: baseUrl!, apiKey, pollMs: POLL_MS };

  it("lists registered models, surfaces injected drift within one poll, promotes", async () => {
    const client = new ApiClient(session);
    const store = new ConsoleStore(client, memoryAcks());

    // 1. the model browser lists both registered versions
    await store.refreshModels();
    expect(store.state.apiDown).toBe(false);
    const versions = store.state.models.filter((m) => m.model_id === "admit-risk");
    expect(versions.length).toBeGreaterThanOrEqual(2);
    expect(versions.find((m) => m.version === 1)?.stage).toBe("Production");
    expect(versions.find((m) => m.version === 2)?.stage).toBe("Staging");

    // lineage panel resolves from the provenance route
    const v1 = versions.find((m) => m.version === 1)!;
    await store.openLineage(v1.provenance_ref);
    expect(store.state.lineage[v1.provenance_ref]?.record.algorithm).toBe("logreg_sgd");

    // 2. drift: trigger a monitor run; the polling loop must surface the
    //    critical alert within one polling interval
    store.startPolling(POLL_MS);
    try {
      await store.runMonitorNow(); // the "Run monitor now" button
      const deadline = Date.now() + POLL_MS + 500;
      let critical = store.state.alerts.filter((a) => a.severity === "critical");
      while (!critical.length && Date.now() < deadline) {
        await sleep(100);
        critical = store.state.alerts.filter((a) => a.severity === "critical");
      }
      expect(critical.length).toBeGreaterThan(0);
      expect(critical.some((a) => a.kind === "feature_drift" && a.model_id === "admit-risk")).toBe(true);
    } finally {
      store.stopPolling();
    }

    // 3. Staging -> Production promotion through the modal flow,
    //    visible afterwards via GET /v1/models
    const v2 = store.state.models.find((m) => m.model_id === "admit-risk" && m.version === 2)!;
    store.beginPromote(v2, "Production");
    expect(store.state.promote?.archives?.version).toBe(1);
    await store.confirmPromote();
    expect(store.state.promote).toBeNull();

    const after = await client.listModels();
    expect(after.find((m) => m.version === 2)?.stage).toBe("Production");
    expect(after.find((m) => m.version === 1)?.stage).toBe("Archived");

    // a disallowed transition shows the server's reason inline
    const archived = (await client.listModels()).find((m) => m.version === 1)!;
    store.update((s) => {
      s.models = after;
    });
    store.beginPromote(archived, "Production");
    await store.confirmPromote();
    expect(store.state.promote?.error).toContain("not allowed");
  }, 60_000);
});
