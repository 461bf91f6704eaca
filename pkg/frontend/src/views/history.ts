/** History view: this session's submissions plus the service-wide counters. */

import type { AuthRecord, MetricsWire } from "../api/types.js";
import { esc, verdictBadge } from "./html.js";

export interface HistoryEntry {
  record: AuthRecord;
  feedback?: string;
}

export type FeedbackFlag = "confirmed" | "disputed" | "labeled" | null;

/**
 * Compare the expert label with the service verdict (string equality on two
 * server-sent fields; REJECT verdicts take a label without agreeing or not).
 */
export function feedbackFlag(entry: HistoryEntry): FeedbackFlag {
  if (!entry.feedback) return null;
  const verdict = entry.record.result.verdict.label;
  if (verdict === "REJECT") return "labeled";
  return verdict.toLowerCase() === entry.feedback ? "confirmed" : "disputed";
}

export function renderHistory(entries: readonly HistoryEntry[], metrics: MetricsWire | null): string {
  return `
    ${renderMetricsCard(metrics)}
    <div class="card">
      <h2>Session submissions</h2>
      ${renderTally(entries)}
      ${entries.length === 0 ? `<p class="empty">Nothing submitted yet.</p>` : renderEntriesTable(entries)}
    </div>
  `;
}

function renderTally(entries: readonly HistoryEntry[]): string {
  if (entries.length === 0) return "";
  const flags = entries.map(feedbackFlag);
  const confirmed = flags.filter((f) => f === "confirmed").length;
  const disputed = flags.filter((f) => f === "disputed").length;
  return `<p class="tally">${entries.length} submitted ·
    <span class="flag-confirmed">${confirmed} confirmed</span> ·
    <span class="flag-disputed">${disputed} disputed</span></p>`;
}

function renderEntriesTable(entries: readonly HistoryEntry[]): string {
  const rows = entries
    .map((entry) => {
      const record = entry.record;
      const score = record.result.score;
      const capture = record.capture_meta;
      const flag = feedbackFlag(entry);
      const expert = entry.feedback
        ? `${esc(entry.feedback)}${flag === null ? "" : ` <span class="flag-${flag}">${flag}</span>`}`
        : "";
      return `<tr${flag === "disputed" ? ` class="row-disputed"` : ""}>
        <td>${esc(record.received_at)}</td>
        <td><code>${esc(record.request_id.slice(0, 8))}</code></td>
        <td>${capture === null ? "n/a" : `${esc(capture.device_id)} @ ${esc(capture.venue)}`}</td>
        <td>${verdictBadge(record.result.verdict.label)}</td>
        <td>${score === null ? "n/a" : `<code class="num">${esc(score.value.text)}</code>`}</td>
        <td>${expert}</td>
      </tr>`;
    })
    .join("");
  return `
    <table class="listing">
      <thead><tr>
        <th>Received</th><th>Request</th><th>Capture</th><th>Verdict</th><th>Score</th><th>Expert label</th>
      </tr></thead>
      <tbody>${rows}</tbody>
    </table>
  `;
}

/** Counters come straight off /v1/metrics; rates are shown as sent, unrounded. */
export function renderMetricsCard(metrics: MetricsWire | null): string {
  if (metrics === null) {
    return `<div class="card"><h2>Service counters</h2><p class="empty">Not loaded.</p></div>`;
  }
  const verdictCells = (["GENUINE", "COUNTERFEIT", "REJECT"] as const)
    .map((label) => `<td>${verdictBadge(label)} <code class="num">${esc(metrics.verdicts[label].text)}</code></td>`)
    .join("");
  const agreement =
    metrics.feedback_agreement === null
      ? "n/a"
      : `<code class="num">${esc(metrics.feedback_agreement.text)}</code>`;
  return `
    <div class="card">
      <h2>Service counters</h2>
      <table class="detail">
        <tr><th>Requests</th><td><code class="num">${esc(metrics.requests_total.text)}</code></td></tr>
        <tr><th>Verdicts</th>${verdictCells}</tr>
        <tr><th>Rejection rate</th><td><code class="num">${esc(metrics.rejection_rate.text)}</code></td></tr>
        <tr><th>Feedback</th><td><code class="num">${esc(metrics.feedback_total.text)}</code> labeled, agreement ${agreement}</td></tr>
        <tr><th>Active model</th><td>${
          metrics.active_model_version === null ? "n/a" : `<code>${esc(metrics.active_model_version)}</code>`
        }</td></tr>
        <tr><th>Active thresholds</th><td>${
          metrics.active_thresholds_version === null
            ? "n/a"
            : `<code>${esc(metrics.active_thresholds_version)}</code>`
        }</td></tr>
      </table>
      <button type="button" id="metrics-refresh">Refresh</button>
    </div>
  `;
}
