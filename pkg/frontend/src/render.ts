/** Pure HTML renderers over console state.
 *
 * Every domain number shown here is copied verbatim (or fixed-precision
 * formatted) from an API response field; nothing is derived client-side.
 */

import type { ConsoleState, PromoteFlow } from "./state.js";
import { allowedTargets, latestDriftByMetric, sortedTimeline } from "./state.js";
import type { AlertRecord, Lineage, ModelSpec } from "./types.js";

export function esc(text: unknown): string {
  return String(text)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function metric(value: number | undefined, digits = 4): string {
  return value === undefined ? "–" : value.toFixed(digits);
}

function shortDigest(digest: string): string {
  return digest.slice(0, 12);
}

export function renderBanner(state: ConsoleState): string {
  if (state.apiDown) {
    return `<div class="banner banner-error">API unreachable — data shown may be stale`
      + (state.lastSync ? ` (last sync ${esc(state.lastSync)})` : "") + `</div>`;
  }
  if (state.lastError) {
    return `<div class="banner banner-warn">${esc(state.lastError)}</div>`;
  }
  return "";
}

export function renderNav(state: ConsoleState): string {
  const tab = (view: string, label: string, href: string) => {
    const active = state.route.view === view ? " class=\"active\"" : "";
    return `<a href="${href}"${active}>${label}</a>`;
  };
  return `<nav>${tab("models", "Models", "#/models")}${tab("alerts", "Alerts", "#/alerts")}</nav>`;
}

export function renderModelList(state: ConsoleState): string {
  if (!state.models.length) {
    return `<p class="empty">No registered models yet.</p>`;
  }
  const rows = state.models
    .map(
      (spec) => `
  <tr data-action="open-model" data-model="${esc(spec.model_id)}" data-version="${spec.version}">
    <td>${esc(spec.model_id)}</td>
    <td>v${spec.version}</td>
    <td><span class="stage stage-${spec.stage.toLowerCase()}">${spec.stage}</span></td>
    <td>${esc(spec.task_id)}</td>
    <td class="num">${metric(spec.metrics["auc_test"])}</td>
    <td class="num">${metric(spec.metrics["brier_test"])}</td>
    <td>${esc(spec.registered_at)}</td>
  </tr>`,
    )
    .join("");
  return `
<table class="models">
  <thead><tr><th>Model</th><th>Version</th><th>Stage</th><th>Task</th><th>auc_test</th><th>brier_test</th><th>Registered</th></tr></thead>
  <tbody>${rows}</tbody>
</table>`;
}

export function renderModelDetail(state: ConsoleState, spec: ModelSpec): string {
  const metricsRows = Object.entries(spec.metrics)
    .map(([name, value]) => `<tr><td>${esc(name)}</td><td class="num">${metric(value)}</td></tr>`)
    .join("");
  const thresholdRows = Object.entries(spec.thresholds)
    .map(([name, value]) => `<tr><td>${esc(name)}</td><td class="num">${metric(value, 2)}</td></tr>`)
    .join("");
  const actions = allowedTargets(spec)
    .map(
      (to) =>
        `<button data-action="begin-promote" data-model="${esc(spec.model_id)}" data-version="${spec.version}" data-to="${to}">${
          to === "Production" ? "Promote to Production" : to === "Staging" ? "Move to Staging" : "Archive"
        }</button>`,
    )
    .join(" ");
  const lineagePanel = state.lineageOpen === spec.provenance_ref && state.lineage[spec.provenance_ref]
    ? renderLineage(state.lineage[spec.provenance_ref]!)
    : "";
  return `
<section class="detail">
  <h2>${esc(spec.model_id)} <small>v${spec.version}</small>
      <span class="stage stage-${spec.stage.toLowerCase()}">${spec.stage}</span></h2>
  <dl>
    <dt>Task</dt><dd>${esc(spec.task_id)}</dd>
    <dt>Serving handle</dt><dd><code>${esc(spec.serving_handle)}</code></dd>
    <dt>Features</dt><dd>${spec.feature_refs.length} refs</dd>
    <dt>Metadata generators</dt><dd>${spec.metadata_generator_ids.map(esc).join(", ")}</dd>
    <dt>Registered</dt><dd>${esc(spec.registered_at)}</dd>
    <dt>Provenance</dt>
    <dd><a href="#" data-action="open-lineage" data-digest="${esc(spec.provenance_ref)}">
      <code>${esc(shortDigest(spec.provenance_ref))}…</code></a></dd>
    <dt>Artifact</dt><dd><code>${esc(shortDigest(spec.artifact_digest))}…</code></dd>
  </dl>
  <h3>Metrics</h3>
  <table class="kv"><tbody>${metricsRows}</tbody></table>
  <h3>Thresholds</h3>
  <table class="kv"><tbody>${thresholdRows}</tbody></table>
  <div class="actions">${actions}</div>
  ${lineagePanel}
</section>`;
}

export function renderLineage(lineage: Lineage): string {
  const record = lineage.record;
  const featureRows = lineage.feature_definitions
    .map(
      ([name, version, generator, paramsDigest]) =>
        `<tr><td>${esc(name)}</td><td>v${version}</td><td>${esc(generator)}</td><td><code>${esc(shortDigest(paramsDigest))}…</code></td></tr>`,
    )
    .join("");
  const hyperRows = Object.entries(record.hyperparameters)
    .map(([name, value]) => `<tr><td>${esc(name)}</td><td class="num">${esc(value)}</td></tr>`)
    .join("");
  return `
<section class="lineage">
  <h3>Lineage <button data-action="close-lineage">close</button></h3>
  <dl>
    <dt>Record digest</dt><dd><code>${esc(record.record_digest)}</code></dd>
    <dt>Algorithm</dt><dd>${esc(record.algorithm)}</dd>
    <dt>Code revision</dt><dd>${esc(record.code_revision)}</dd>
    <dt>Train cohort</dt><dd><code>${esc(lineage.train_cohort_digest)}</code></dd>
    <dt>Test cohort</dt><dd><code>${esc(lineage.test_cohort_digest)}</code></dd>
    <dt>Created</dt><dd>${esc(record.created_at)}</dd>
  </dl>
  <h4>Hyperparameters</h4>
  <table class="kv"><tbody>${hyperRows}</tbody></table>
  <h4>Feature definitions</h4>
  <table class="kv">
    <thead><tr><th>Name</th><th>Version</th><th>Generator</th><th>Params digest</th></tr></thead>
    <tbody>${featureRows}</tbody>
  </table>
</section>`;
}

export function renderPromoteModal(flow: PromoteFlow): string {
  const archiveNote = flow.archives
    ? `<p class="warn">This archives the current Production version
       <strong>${esc(flow.archives.model_id)} v${flow.archives.version}</strong>.</p>`
    : "";
  const error = flow.error ? `<p class="inline-error">${esc(flow.error)}</p>` : "";
  return `
<div class="modal-backdrop">
  <div class="modal">
    <h3>${esc(flow.to)} — ${esc(flow.spec.model_id)} v${flow.spec.version}</h3>
    <p>Move <strong>${esc(flow.spec.model_id)} v${flow.spec.version}</strong>
       from ${flow.spec.stage} to <strong>${esc(flow.to)}</strong>?</p>
    ${archiveNote}
    ${error}
    <div class="actions">
      <button data-action="confirm-promote"${flow.busy ? " disabled" : ""}>Confirm</button>
      <button data-action="cancel-promote">Cancel</button>
    </div>
  </div>
</div>`;
}

function alertRow(alert: AlertRecord, acknowledged: boolean): string {
  return `
  <li class="alert alert-${alert.severity}${acknowledged ? " acked" : ""}">
    <span class="when">${esc(alert.raised_at)}</span>
    <span class="sev">${alert.severity}</span>
    <span class="what">${esc(alert.kind)} · ${esc(alert.model_id)} v${alert.model_version} · ${esc(alert.metric_name)}</span>
    <span class="num">${metric(alert.value)} (threshold ${metric(alert.threshold, 2)})</span>
    <span class="action">${esc(alert.suggested_action)}</span>
    ${acknowledged ? "<span class=\"ack-label\">acknowledged</span>" : `<button data-action="ack-alert" data-alert="${esc(alert.alert_id)}">acknowledge</button>`}
  </li>`;
}

export function renderAlerts(state: ConsoleState): string {
  const timeline = sortedTimeline(state.alerts);
  const drift = latestDriftByMetric(state.alerts);
  const timelineHtml = timeline.length
    ? `<ul class="timeline">${timeline.map((a) => alertRow(a, state.acknowledged.has(a.alert_id))).join("")}</ul>`
    : `<p class="empty">No alerts raised.</p>`;
  const driftRows = drift
    .map(
      (a) => `
  <tr class="sev-${a.severity}">
    <td>${esc(a.model_id)} v${a.model_version}</td>
    <td>${esc(a.metric_name)}</td>
    <td class="num">${metric(a.value)}</td>
    <td class="num">${metric(a.threshold, 2)}</td>
    <td>${a.severity}</td>
  </tr>`,
    )
    .join("");
  const driftHtml = drift.length
    ? `<table class="kv">
  <thead><tr><th>Model</th><th>Feature</th><th>psi</th><th>threshold</th><th>severity</th></tr></thead>
  <tbody>${driftRows}</tbody></table>`
    : `<p class="empty">No drift measurements reported.</p>`;
  return `
<section>
  <div class="toolbar"><button data-action="run-monitor">Run monitor now</button></div>
  <h2>Alert timeline</h2>
  ${timelineHtml}
  <h2>Current drift (latest psi per feature)</h2>
  ${driftHtml}
</section>`;
}

export function renderApp(state: ConsoleState): string {
  let body: string;
  if (state.route.view === "model") {
    const { modelId, version } = state.route;
    const spec = state.models.find((m) => m.model_id === modelId && m.version === version);
    body = spec ? renderModelDetail(state, spec) : `<p class="empty">Unknown model ${esc(modelId)} v${version}.</p>`;
  } else if (state.route.view === "alerts") {
    body = renderAlerts(state);
  } else {
    body = renderModelList(state);
  }
  const modal = state.promote ? renderPromoteModal(state.promote) : "";
  return `${renderBanner(state)}${renderNav(state)}<main>${body}</main>${modal}`;
}
