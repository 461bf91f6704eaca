/**
 * Wire types for the /v1 HTTP API, plus decoders from raw JSON.
 *
 * Numeric fields stay as RawNumber so the console can render the exact
 * bytes the service produced; decoders only restructure, never compute.
 */

import {
  RawJson,
  RawNumber,
  asArray,
  asBoolean,
  asNumber,
  asObject,
  asString,
  orNull,
} from "./raw.js";

export type VerdictLabel = "GENUINE" | "COUNTERFEIT" | "REJECT";

export const VENUES = [
  "retail",
  "customs",
  "warehouse",
  "outdoor",
  "returns_facility",
  "unknown",
] as const;

export interface BBoxWire {
  x0: RawNumber;
  y0: RawNumber;
  x1: RawNumber;
  y1: RawNumber;
}

export interface DetectionWire {
  bbox: BBoxWire;
  confidence: RawNumber;
}

export interface ScoreWire {
  value: RawNumber;
  model_version: string;
}

export interface VerdictWire {
  label: VerdictLabel;
  reason: string | null;
}

export interface AuthResultWire {
  verdict: VerdictWire;
  thresholds_version: string;
  score: ScoreWire | null;
  detection: DetectionWire | null;
}

export interface CaptureMetaWire {
  device_id: string;
  venue: string;
  captured_at: string | null;
}

export interface AuthRecord {
  request_id: string;
  received_at: string;
  capture_meta: CaptureMetaWire | null;
  result: AuthResultWire;
  model_version: string;
  thresholds_version: string;
  image_path: string;
}

export interface FeedbackRecordWire {
  request_id: string;
  expert_label: "genuine" | "counterfeit";
  submitted_at: string;
  submitter: string;
}

export interface BandWire {
  lower: RawNumber;
  upper: RawNumber;
  version: string;
}

export interface VerdictCountsWire {
  GENUINE: RawNumber;
  COUNTERFEIT: RawNumber;
  REJECT: RawNumber;
}

export interface MetricsWire {
  requests_total: RawNumber;
  verdicts: VerdictCountsWire;
  rejection_rate: RawNumber;
  feedback_total: RawNumber;
  feedback_agreement: RawNumber | null;
  active_model_version: string | null;
  active_thresholds_version: string | null;
}

export interface ModelEntryWire {
  version: string;
  architecture: string;
  weight_count: RawNumber;
  active: boolean;
}

export interface ActivationWire {
  active_model_version: string;
  thresholds_version: string;
}

/** Raw text of the three cost inputs, validated before any request is sent. */
export interface RawCostFields {
  cost_false_genuine: string;
  cost_false_counterfeit: string;
  cost_reject: string;
}

export interface CurvePointWire {
  rejection_budget: RawNumber;
  best_accuracy: RawNumber;
  band: BandWire;
  achieved_rejection: RawNumber;
}

export interface TradeoffWire {
  points: CurvePointWire[];
}

// -- decoders -----------------------------------------------------------------

function decodeVerdictLabel(v: RawJson | undefined, where: string): VerdictLabel {
  const label = asString(v, where);
  if (label !== "GENUINE" && label !== "COUNTERFEIT" && label !== "REJECT") {
    throw new TypeError(`${where}: unknown verdict label ${label}`);
  }
  return label;
}

function decodeBBox(v: RawJson | undefined, where: string): BBoxWire {
  const o = asObject(v, where);
  return {
    x0: asNumber(o.x0, `${where}.x0`),
    y0: asNumber(o.y0, `${where}.y0`),
    x1: asNumber(o.x1, `${where}.x1`),
    y1: asNumber(o.y1, `${where}.y1`),
  };
}

function decodeDetection(v: RawJson | undefined, where: string): DetectionWire {
  const o = asObject(v, where);
  return {
    bbox: decodeBBox(o.bbox, `${where}.bbox`),
    confidence: asNumber(o.confidence, `${where}.confidence`),
  };
}

function decodeScore(v: RawJson | undefined, where: string): ScoreWire {
  const o = asObject(v, where);
  return {
    value: asNumber(o.value, `${where}.value`),
    model_version: asString(o.model_version, `${where}.model_version`),
  };
}

function decodeCaptureMeta(v: RawJson | undefined, where: string): CaptureMetaWire {
  const o = asObject(v, where);
  return {
    device_id: asString(o.device_id, `${where}.device_id`),
    venue: asString(o.venue, `${where}.venue`),
    captured_at: orNull(o.captured_at, `${where}.captured_at`, asString),
  };
}

export function decodeAuthRecord(v: RawJson): AuthRecord {
  const o = asObject(v, "record");
  const result = asObject(o.result, "record.result");
  const verdict = asObject(result.verdict, "record.result.verdict");
  return {
    request_id: asString(o.request_id, "record.request_id"),
    received_at: asString(o.received_at, "record.received_at"),
    capture_meta: orNull(o.capture_meta, "record.capture_meta", decodeCaptureMeta),
    result: {
      verdict: {
        label: decodeVerdictLabel(verdict.label, "verdict.label"),
        reason: orNull(verdict.reason, "verdict.reason", asString),
      },
      thresholds_version: asString(result.thresholds_version, "result.thresholds_version"),
      score: orNull(result.score, "result.score", decodeScore),
      detection: orNull(result.detection, "result.detection", decodeDetection),
    },
    model_version: asString(o.model_version, "record.model_version"),
    thresholds_version: asString(o.thresholds_version, "record.thresholds_version"),
    image_path: asString(o.image_path, "record.image_path"),
  };
}

export function decodeFeedbackRecord(v: RawJson): FeedbackRecordWire {
  const o = asObject(v, "feedback");
  const label = asString(o.expert_label, "feedback.expert_label");
  if (label !== "genuine" && label !== "counterfeit") {
    throw new TypeError(`feedback.expert_label: unknown label ${label}`);
  }
  return {
    request_id: asString(o.request_id, "feedback.request_id"),
    expert_label: label,
    submitted_at: asString(o.submitted_at, "feedback.submitted_at"),
    submitter: asString(o.submitter, "feedback.submitter"),
  };
}

export function decodeBand(v: RawJson, where = "band"): BandWire {
  const o = asObject(v, where);
  return {
    lower: asNumber(o.lower, `${where}.lower`),
    upper: asNumber(o.upper, `${where}.upper`),
    version: asString(o.version, `${where}.version`),
  };
}

export function decodeMetrics(v: RawJson): MetricsWire {
  const o = asObject(v, "metrics");
  const verdicts = asObject(o.verdicts, "metrics.verdicts");
  return {
    requests_total: asNumber(o.requests_total, "metrics.requests_total"),
    verdicts: {
      GENUINE: asNumber(verdicts.GENUINE, "verdicts.GENUINE"),
      COUNTERFEIT: asNumber(verdicts.COUNTERFEIT, "verdicts.COUNTERFEIT"),
      REJECT: asNumber(verdicts.REJECT, "verdicts.REJECT"),
    },
    rejection_rate: asNumber(o.rejection_rate, "metrics.rejection_rate"),
    feedback_total: asNumber(o.feedback_total, "metrics.feedback_total"),
    feedback_agreement: orNull(o.feedback_agreement, "metrics.feedback_agreement", asNumber),
    active_model_version: orNull(o.active_model_version, "metrics.active_model_version", asString),
    active_thresholds_version: orNull(
      o.active_thresholds_version,
      "metrics.active_thresholds_version",
      asString,
    ),
  };
}

export function decodeModels(v: RawJson): ModelEntryWire[] {
  const o = asObject(v, "models");
  return asArray(o.models, "models.models").map((entry, i) => {
    const e = asObject(entry, `models[${i}]`);
    return {
      version: asString(e.version, `models[${i}].version`),
      architecture: asString(e.architecture, `models[${i}].architecture`),
      weight_count: asNumber(e.weight_count, `models[${i}].weight_count`),
      active: asBoolean(e.active, `models[${i}].active`),
    };
  });
}

export function decodeActivation(v: RawJson): ActivationWire {
  const o = asObject(v, "activation");
  return {
    active_model_version: asString(o.active_model_version, "activation.active_model_version"),
    thresholds_version: asString(o.thresholds_version, "activation.thresholds_version"),
  };
}

export function decodeTradeoff(v: RawJson): TradeoffWire {
  const o = asObject(v, "tradeoff");
  return {
    points: asArray(o.points, "tradeoff.points").map((p, i) => {
      const point = asObject(p, `points[${i}]`);
      return {
        rejection_budget: asNumber(point.rejection_budget, `points[${i}].rejection_budget`),
        best_accuracy: asNumber(point.best_accuracy, `points[${i}].best_accuracy`),
        band: decodeBand(point.band ?? null, `points[${i}].band`),
        achieved_rejection: asNumber(point.achieved_rejection, `points[${i}].achieved_rejection`),
      };
    }),
  };
}
