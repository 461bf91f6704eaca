/** Authenticate view: submit a capture, show the service's verdict verbatim. */

import type { AuthRecord, BandWire, DetectionWire, ScoreWire } from "../api/types.js";
import { VENUES } from "../api/types.js";
import { esc, verdictBadge } from "./html.js";

export interface PreviewInfo {
  url: string;
  width: number;
  height: number;
}

export interface ResultCardOptions {
  preview?: PreviewInfo;
  band?: BandWire | null;
  feedback?: string;
}

export function renderAuthenticateForm(): string {
  const options = VENUES.map(
    (v) => `<option value="${esc(v)}"${v === "retail" ? " selected" : ""}>${esc(v)}</option>`,
  ).join("");
  return `
    <form id="auth-form" class="card">
      <h2>Submit a capture</h2>
      <label>Image
        <input type="file" id="auth-image" name="image" accept="image/*" capture="environment" required>
      </label>
      <label>Device ID
        <input type="text" id="auth-device" name="device_id" value="console-1">
      </label>
      <label>Venue
        <select id="auth-venue" name="venue">${options}</select>
      </label>
      <button type="submit" id="auth-submit">Authenticate</button>
      <span id="auth-status" class="status" role="status"></span>
    </form>
    <div id="auth-result"></div>
  `;
}

/** Layout percentage for a unit-interval value; display strings stay raw. */
function pct(value: number): string {
  return `${Math.min(100, Math.max(0, value * 100))}%`;
}

/**
 * Score gauge over [0, 1]. The band shading and markers sit at the exact
 * server-sent thresholds; the labels print their wire text unmodified.
 */
export function renderScoreGauge(score: ScoreWire | null, band: BandWire | null): string {
  if (score === null) return "";
  const bandParts =
    band === null
      ? ""
      : `<div class="gauge-band" style="left:${pct(band.lower.value)};width:${pct(
          Math.max(0, band.upper.value - band.lower.value),
        )}"></div>
        <div class="gauge-mark" style="left:${pct(band.lower.value)}" title="lower ${esc(band.lower.text)}"></div>
        <div class="gauge-mark" style="left:${pct(band.upper.value)}" title="upper ${esc(band.upper.text)}"></div>`;
  const legend =
    band === null
      ? `<span class="empty">band unknown until a recalibration runs this session</span>`
      : `band (<code class="num">${esc(band.lower.text)}</code>, <code class="num">${esc(
          band.upper.text,
        )}</code>] · <code>${esc(band.version)}</code>`;
  return `
    <div class="gauge-wrap">
      <div class="gauge">
        ${bandParts}
        <div class="gauge-score" style="left:${pct(score.value.value)}" title="score ${esc(score.value.text)}"></div>
      </div>
      <div class="gauge-legend">score <code class="num">${esc(score.value.text)}</code> · ${legend}</div>
    </div>
  `;
}

/** Thumbnail of the submitted capture with the detection box drawn over it. */
export function renderDetectionOverlay(preview: PreviewInfo, detection: DetectionWire | null): string {
  const box =
    detection === null
      ? ""
      : `<div class="bbox-overlay" style="left:${pct(detection.bbox.x0.value / preview.width)};top:${pct(
          detection.bbox.y0.value / preview.height,
        )};width:${pct((detection.bbox.x1.value - detection.bbox.x0.value) / preview.width)};height:${pct(
          (detection.bbox.y1.value - detection.bbox.y0.value) / preview.height,
        )}"></div>`;
  return `
    <div class="thumb" style="aspect-ratio:${preview.width} / ${preview.height}">
      <img src="${esc(preview.url)}" alt="submitted capture">
      ${box}
    </div>
  `;
}

/**
 * Result card for one authentication. Every numeric field is printed from the
 * raw wire text, so what the operator reads is exactly what the service sent.
 */
export function renderResultCard(record: AuthRecord, opts: ResultCardOptions = {}): string {
  const verdict = record.result.verdict;
  const score = record.result.score;
  const detection = record.result.detection;
  const rows: string[] = [
    `<tr><th>Request</th><td><code>${esc(record.request_id)}</code></td></tr>`,
    `<tr><th>Received</th><td>${esc(record.received_at)}</td></tr>`,
    `<tr><th>Verdict</th><td>${verdictBadge(verdict.label)}${
      verdict.reason === null ? "" : ` <span class="reason">${esc(verdict.reason)}</span>`
    }</td></tr>`,
  ];
  if (score === null) {
    rows.push(`<tr><th>Score</th><td>n/a</td></tr>`);
  } else {
    rows.push(
      `<tr><th>Score</th><td><code class="num">${esc(score.value.text)}</code></td></tr>`,
      `<tr><th>Scored by</th><td><code>${esc(score.model_version)}</code></td></tr>`,
    );
  }
  if (detection !== null) {
    const b = detection.bbox;
    rows.push(
      `<tr><th>Mark bbox</th><td><code class="num">(${esc(b.x0.text)}, ${esc(b.y0.text)}, ${esc(
        b.x1.text,
      )}, ${esc(b.y1.text)})</code></td></tr>`,
      `<tr><th>Detector confidence</th><td><code class="num">${esc(
        detection.confidence.text,
      )}</code></td></tr>`,
    );
  }
  rows.push(
    `<tr><th>Model</th><td><code>${esc(record.model_version)}</code></td></tr>`,
    `<tr><th>Thresholds</th><td><code>${esc(record.result.thresholds_version)}</code></td></tr>`,
  );
  const retake =
    verdict.label === "REJECT"
      ? `<p class="retake-hint">Not classified. Retake the photo closer to the emblem and resubmit.</p>`
      : "";
  const feedbackBlock = opts.feedback
    ? `<p class="feedback-done">Expert label recorded: <strong>${esc(opts.feedback)}</strong></p>`
    : `<div class="feedback" data-request="${esc(record.request_id)}">
        <span>Expert review:</span>
        <button type="button" class="feedback-btn" data-label="genuine">genuine</button>
        <button type="button" class="feedback-btn" data-label="counterfeit">counterfeit</button>
      </div>`;
  return `
    <div class="card result-card">
      ${opts.preview ? renderDetectionOverlay(opts.preview, detection) : ""}
      ${renderScoreGauge(score, opts.band ?? null)}
      <table class="detail">${rows.join("")}</table>
      ${retake}
      ${feedbackBlock}
    </div>
  `;
}

export function renderAuthError(message: string): string {
  return `<div class="card error-card">${esc(message)}</div>`;
}
