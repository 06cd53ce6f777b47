/** Browser bootstrap: session form, hash routing, event delegation, polling. */

import { ApiClient } from "./api.js";
import { ConsoleStore, localStorageAcks } from "./state.js";
import type { Route } from "./state.js";
import { renderApp } from "./render.js";
import type { ConsoleSession, StageName } from "./types.js";

function parseRoute(hash: string): Route {
  const modelMatch = /^#\/models\/([^/]+)\/(\d+)$/.exec(hash);
  if (modelMatch) {
    return { view: "model", modelId: decodeURIComponent(modelMatch[1]!), version: Number(modelMatch[2]) };
  }
  if (hash.startsWith("#/alerts")) return { view: "alerts" };
  return { view: "models" };
}

function start(session: ConsoleSession): ConsoleStore {
  const client = new ApiClient(session);
  const store = new ConsoleStore(client, localStorageAcks(window.localStorage));
  const rootEl = document.getElementById("app")!;

  store.subscribe((state) => {
    rootEl.innerHTML = renderApp(state);
  });

  const syncRoute = () => {
    store.update((s) => {
      s.route = parseRoute(window.location.hash);
    });
    if (store.state.route.view === "alerts") void store.refreshAlerts();
    else void store.refreshModels();
  };
  window.addEventListener("hashchange", syncRoute);

  rootEl.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    const action = target.dataset["action"];
    if (action === "open-model") {
      window.location.hash = `#/models/${encodeURIComponent(target.dataset["model"]!)}/${target.dataset["version"]}`;
    } else if (action === "open-lineage") {
      event.preventDefault();
      void store.openLineage(target.dataset["digest"]!);
    } else if (action === "close-lineage") {
      store.closeLineage();
    } else if (action === "begin-promote") {
      const spec = store.state.models.find(
        (m) => m.model_id === target.dataset["model"] && m.version === Number(target.dataset["version"]),
      );
      if (spec) store.beginPromote(spec, target.dataset["to"] as StageName);
    } else if (action === "confirm-promote") {
      void store.confirmPromote();
    } else if (action === "cancel-promote") {
      store.cancelPromote();
    } else if (action === "ack-alert") {
      store.acknowledge(target.dataset["alert"]!);
    } else if (action === "run-monitor") {
      void store.runMonitorNow();
    }
  });

  syncRoute();
  store.startPolling(session.pollMs);
  return store;
}

function init(): void {
  const form = document.getElementById("session-form") as HTMLFormElement;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const baseUrl = (document.getElementById("base-url") as HTMLInputElement).value.replace(/\/$/, "");
    const apiKey = (document.getElementById("api-key") as HTMLInputElement).value;
    const pollMs = Number((document.getElementById("poll-ms") as HTMLInputElement).value) || 5000;
    form.closest("header")!.classList.add("connected");
    start({ baseUrl, apiKey, pollMs });
  });
}

init();
