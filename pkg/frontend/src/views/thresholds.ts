/** Thresholds view: model registry, cost-driven recalibration, tradeoff table. */

import type { BandWire, ModelEntryWire, RawCostFields, TradeoffWire } from "../api/types.js";
import type { RawNumber } from "../api/raw.js";
import { esc } from "./html.js";

export function renderModelsCard(models: readonly ModelEntryWire[]): string {
  if (models.length === 0) {
    return `<div class="card"><h2>Models</h2><p class="empty">No saved models found by the service.</p></div>`;
  }
  const rows = models
    .map(
      (m) => `<tr${m.active ? ` class="active-row"` : ""}>
        <td><code>${esc(m.version)}</code></td>
        <td>${esc(m.architecture)}</td>
        <td><code class="num">${esc(m.weight_count.text)}</code></td>
        <td>${
          m.active
            ? `<strong>active</strong>`
            : `<button type="button" class="activate-btn" data-version="${esc(m.version)}">activate</button>`
        }</td>
      </tr>`,
    )
    .join("");
  return `
    <div class="card">
      <h2>Models</h2>
      <table class="listing">
        <thead><tr><th>Version</th><th>Architecture</th><th>Weights</th><th></th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
    </div>
  `;
}

/**
 * Client-side mirror of the service's cost rule: error costs are >= 0 and
 * the reject cost is strictly positive (a free reject would make rejecting
 * everything optimal). Returns field id -> message for invalid entries.
 */
export function validateCosts(costs: RawCostFields): Record<string, string> {
  const errors: Record<string, string> = {};
  for (const [field, raw] of Object.entries(costs)) {
    const value = Number(raw);
    if (raw.trim() === "" || !Number.isFinite(value)) {
      errors[field] = "enter a number";
    } else if (field === "cost_reject" ? !(value > 0) : value < 0) {
      errors[field] = field === "cost_reject" ? "must be > 0" : "must be >= 0";
    }
  }
  return errors;
}

export function renderCostForm(): string {
  const field = (id: string, name: string, label: string, initial: string) => `
      <label>${label}
        <input type="text" id="${id}" name="${name}" value="${initial}" inputmode="decimal">
        <span class="field-error" data-for="${name}" role="alert"></span>
      </label>`;
  return `
    <form id="cost-form" class="card">
      <h2>Recalibrate the band</h2>
      <p class="hint">The service searches its stored validation scores; the console only reports the result.</p>
      ${field("cost-fg", "cost_false_genuine", "Cost of passing a counterfeit", "1.0")}
      ${field("cost-fc", "cost_false_counterfeit", "Cost of flagging a genuine", "1.0")}
      ${field("cost-rej", "cost_reject", "Cost of sending to review", "0.5")}
      <button type="submit">Recalibrate</button>
      <span id="cost-status" class="status" role="status"></span>
      <div id="band-result"></div>
    </form>
  `;
}

export function renderBand(band: BandWire): string {
  return `
    <table class="detail">
      <tr><th>Lower</th><td><code class="num">${esc(band.lower.text)}</code></td></tr>
      <tr><th>Upper</th><td><code class="num">${esc(band.upper.text)}</code></td></tr>
      <tr><th>Version</th><td><code>${esc(band.version)}</code></td></tr>
    </table>
  `;
}

function sameBand(a: BandWire, b: BandWire): boolean {
  return a.lower.text === b.lower.text && a.upper.text === b.upper.text;
}

/**
 * The curve point whose band equals the active one; its achieved rejection
 * is the service-computed projection for the current thresholds.
 */
export function projectedRejection(tradeoff: TradeoffWire, band: BandWire): RawNumber | null {
  const match = tradeoff.points.find((p) => sameBand(p.band, band));
  return match ? match.achieved_rejection : null;
}

/** One row per rejection budget, numbers exactly as the service computed them. */
export function renderTradeoffCard(tradeoff: TradeoffWire | null, currentBand: BandWire | null = null): string {
  if (tradeoff === null) {
    return `<div class="card"><h2>Accuracy / rejection tradeoff</h2><p class="empty">Not loaded.</p></div>`;
  }
  const rows = tradeoff.points
    .map((p) => {
      const active = currentBand !== null && sameBand(p.band, currentBand);
      return `<tr${active ? ` class="active-row"` : ""}>
        <td><code class="num">${esc(p.rejection_budget.text)}</code></td>
        <td><code class="num">${esc(p.achieved_rejection.text)}</code></td>
        <td><code class="num">${esc(p.best_accuracy.text)}</code></td>
        <td><code class="num">(${esc(p.band.lower.text)}, ${esc(p.band.upper.text)}]</code></td>
      </tr>`;
    })
    .join("");
  const projected = currentBand === null ? null : projectedRejection(tradeoff, currentBand);
  const projectedLine =
    projected === null
      ? ""
      : `<p class="hint">Projected rejection at the current band: <code class="num">${esc(projected.text)}</code></p>`;
  return `
    <div class="card">
      <h2>Accuracy / rejection tradeoff</h2>
      ${projectedLine}
      <table class="listing">
        <thead><tr><th>Budget</th><th>Achieved rejection</th><th>Best accuracy</th><th>Band</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
    </div>
  `;
}

export function renderThresholds(
  models: readonly ModelEntryWire[],
  tradeoff: TradeoffWire | null,
  currentBand: BandWire | null = null,
): string {
  return `
    ${renderModelsCard(models)}
    ${renderCostForm()}
    ${renderTradeoffCard(tradeoff, currentBand)}
  `;
}
