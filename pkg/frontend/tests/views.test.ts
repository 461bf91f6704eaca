/**
 * View rendering tests: the HTML shows service numbers exactly as sent.
 *
 * Views are pure string renderers, so these tests decode the recorded
 * responses and assert on the produced markup directly. The three
 * operator flows are covered end to end: authenticate -> verdict card,
 * feedback -> confirmed/disputed flag, cost edit -> refreshed band
 * markers and projected rejection.
 */

import { describe, expect, it } from "vitest";

import { parseRaw } from "../src/api/raw.js";
import {
  decodeAuthRecord,
  decodeBand,
  decodeMetrics,
  decodeModels,
  decodeTradeoff,
  type AuthRecord,
  type BandWire,
} from "../src/api/types.js";
import {
  renderAuthenticateForm,
  renderDetectionOverlay,
  renderResultCard,
  renderScoreGauge,
} from "../src/views/authenticate.js";
import { feedbackFlag, renderHistory, renderMetricsCard } from "../src/views/history.js";
import {
  projectedRejection,
  renderModelsCard,
  renderThresholds,
  renderTradeoffCard,
  validateCosts,
} from "../src/views/thresholds.js";
import { fixtureText, rawField } from "./fixtures.js";

function record(name: string): AuthRecord {
  return decodeAuthRecord(parseRaw(fixtureText(name)));
}

function band(): BandWire {
  return decodeBand(parseRaw(fixtureText("thresholds")));
}

describe("authenticate view", () => {
  it("offers every venue the service accepts and a native camera input", () => {
    const html = renderAuthenticateForm();
    for (const venue of ["retail", "customs", "warehouse", "outdoor", "returns_facility", "unknown"]) {
      expect(html).toContain(`value="${venue}"`);
    }
    expect(html).toContain('capture="environment"');
  });

  it("shows the score and bbox exactly as the service sent them", () => {
    const html = renderResultCard(record("authenticate_genuine"));
    expect(html).toContain(rawField("authenticate_genuine", "value"));
    expect(html).toContain("(8.0, 8.0, 56.0, 56.0)");
    expect(html).toContain(rawField("authenticate_genuine", "confidence"));
    expect(html).toContain("badge-genuine");
    expect(html).toContain("t-live02");
    expect(html).toContain("feedback-btn");
  });

  it("marks the gauge at the exact band thresholds with the score above upper", () => {
    const genuine = record("authenticate_genuine");
    const html = renderScoreGauge(genuine.result.score, band());
    expect(html).toContain(`score ${rawField("authenticate_genuine", "value")}`);
    expect(html).toContain(`lower ${rawField("thresholds", "lower")}`);
    expect(html).toContain(`upper ${rawField("thresholds", "upper")}`);
    // layout positions derive from the same wire values
    const scorePct = genuine.result.score!.value.value * 100;
    const upperPct = band().upper.value * 100;
    expect(html).toContain(`left:${scorePct}%`);
    expect(html).toContain(`left:${upperPct}%`);
    expect(scorePct).toBeGreaterThan(upperPct);
  });

  it("renders without band markers until a calibration is seen", () => {
    const html = renderScoreGauge(record("authenticate_genuine").result.score, null);
    expect(html).toContain("gauge-score");
    expect(html).not.toContain("gauge-mark");
    expect(html).toContain("band unknown");
  });

  it("draws the detection overlay scaled to the capture size", () => {
    const detection = record("authenticate_genuine").result.detection;
    const html = renderDetectionOverlay({ url: "blob:x", width: 64, height: 64 }, detection);
    // bbox (8, 8, 56, 56) on a 64x64 capture
    expect(html).toContain("left:12.5%");
    expect(html).toContain("top:12.5%");
    expect(html).toContain("width:75%");
    expect(html).toContain("height:75%");
  });

  it("prompts a retake on REJECT and hides feedback once labeled", () => {
    const reject = record("authenticate_reject");
    expect(renderResultCard(reject)).toContain("retake");
    expect(renderResultCard(reject)).toContain("badge-reject");
    const labeled = renderResultCard(reject, { feedback: "counterfeit" });
    expect(labeled).toContain("Expert label recorded");
    expect(labeled).not.toContain("feedback-btn");
    expect(renderResultCard(record("authenticate_genuine"))).not.toContain("retake");
  });

  it("escapes service strings before they reach the DOM", () => {
    const rec = record("authenticate_genuine");
    const hostile: AuthRecord = {
      ...rec,
      request_id: '<img src=x onerror="steal()">',
      result: {
        ...rec.result,
        verdict: { label: rec.result.verdict.label, reason: "<script>alert(1)</script>" },
      },
    };
    const html = renderResultCard(hostile);
    expect(html).not.toContain("<script>");
    expect(html).not.toContain("<img src=x");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("history view", () => {
  it("flags feedback as confirmed or disputed against the verdict", () => {
    expect(feedbackFlag({ record: record("authenticate_genuine"), feedback: "genuine" })).toBe("confirmed");
    expect(feedbackFlag({ record: record("authenticate_genuine"), feedback: "counterfeit" })).toBe("disputed");
    expect(feedbackFlag({ record: record("authenticate_counterfeit"), feedback: "counterfeit" })).toBe("confirmed");
    expect(feedbackFlag({ record: record("authenticate_reject"), feedback: "genuine" })).toBe("labeled");
    expect(feedbackFlag({ record: record("authenticate_genuine") })).toBeNull();
  });

  it("lists submissions with wire score text and a session tally", () => {
    const entries = [
      { record: record("authenticate_genuine"), feedback: "genuine" },
      { record: record("authenticate_reject") },
      { record: record("authenticate_counterfeit"), feedback: "genuine" },
    ];
    const metrics = decodeMetrics(parseRaw(fixtureText("metrics")));
    const html = renderHistory(entries, metrics);
    expect(html).toContain(rawField("authenticate_genuine", "value"));
    expect(html).toContain(rawField("authenticate_reject", "value"));
    expect(html).toContain("desk-1 @ retail");
    expect(html).toContain("1 confirmed");
    expect(html).toContain("1 disputed");
    expect(html).toContain("row-disputed");
  });

  it("shows the unrounded rejection rate and agreement", () => {
    const metrics = decodeMetrics(parseRaw(fixtureText("metrics")));
    const html = renderMetricsCard(metrics);
    expect(html).toContain("0.3333333333333333");
    expect(html).toContain(">1.0</code>");
    expect(html).toContain("m-live02");
  });

  it("renders an empty state before anything is submitted", () => {
    const html = renderHistory([], null);
    expect(html).toContain("Nothing submitted yet");
    expect(html).toContain("Not loaded");
  });
});

describe("thresholds view", () => {
  it("marks the active model and offers activation for the rest", () => {
    const models = decodeModels(parseRaw(fixtureText("models")));
    const inactive = { ...models[0]!, version: "m-other", active: false };
    const html = renderModelsCard([...models, inactive]);
    expect(html).toContain("m-fixture01");
    expect(html).toContain(rawField("models", "weight_count"));
    expect(html).toContain(">active<");
    expect(html).toContain('data-version="m-other"');
    expect(html).not.toContain('data-version="m-fixture01"');
  });

  it("mirrors the service's cost rule before sending anything", () => {
    const ok = { cost_false_genuine: "1.0", cost_false_counterfeit: "2", cost_reject: "0.5" };
    expect(validateCosts(ok)).toEqual({});
    expect(validateCosts({ ...ok, cost_reject: "0" })).toHaveProperty("cost_reject", "must be > 0");
    expect(validateCosts({ ...ok, cost_reject: "-1" })).toHaveProperty("cost_reject", "must be > 0");
    expect(validateCosts({ ...ok, cost_false_genuine: "-0.1" })).toHaveProperty(
      "cost_false_genuine",
      "must be >= 0",
    );
    expect(validateCosts({ ...ok, cost_false_counterfeit: "abc" })).toHaveProperty(
      "cost_false_counterfeit",
      "enter a number",
    );
    expect(validateCosts({ ...ok, cost_false_genuine: "" })).toHaveProperty("cost_false_genuine");
  });

  it("renders every tradeoff row with byte-identical numbers", () => {
    const tradeoff = decodeTradeoff(parseRaw(fixtureText("tradeoff")));
    const html = renderTradeoffCard(tradeoff);
    for (const point of tradeoff.points) {
      expect(html).toContain(point.rejection_budget.text);
      expect(html).toContain(point.best_accuracy.text);
      expect(html).toContain(`(${point.band.lower.text}, ${point.band.upper.text}]`);
    }
    expect(html).toContain("0.29000000000000004");
  });

  it("highlights the current band's row and projects its rejection", () => {
    const tradeoff = decodeTradeoff(parseRaw(fixtureText("tradeoff")));
    const current = band();
    const projected = projectedRejection(tradeoff, current);
    expect(projected).not.toBeNull();
    const html = renderTradeoffCard(tradeoff, current);
    expect(html).toContain("active-row");
    expect(html).toContain(`Projected rejection at the current band: <code class="num">${projected!.text}</code>`);
    const elsewhere: BandWire = { ...current, lower: { value: 0.123, text: "0.123" } };
    expect(renderTradeoffCard(tradeoff, elsewhere)).not.toContain("Projected rejection");
  });

  it("composes the full tab with the cost form", () => {
    const models = decodeModels(parseRaw(fixtureText("models")));
    const tradeoff = decodeTradeoff(parseRaw(fixtureText("tradeoff")));
    const html = renderThresholds(models, tradeoff, band());
    expect(html).toContain("cost_false_genuine");
    expect(html).toContain("cost_false_counterfeit");
    expect(html).toContain("cost_reject");
    expect(html).toContain("Recalibrate");
    expect(html).toContain("field-error");
  });
});
