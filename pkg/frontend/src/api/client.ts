/**
 * Typed fetch client for the mark authentication service.
 *
 * Every verdict, score, and threshold shown in the console comes from these
 * endpoints; the client never derives or rounds a decision value itself.
 */

import { parseRaw } from "./raw.js";
import {
  ActivationWire,
  AuthRecord,
  BandWire,
  FeedbackRecordWire,
  MetricsWire,
  ModelEntryWire,
  TradeoffWire,
  decodeActivation,
  decodeAuthRecord,
  decodeBand,
  decodeFeedbackRecord,
  decodeMetrics,
  decodeModels,
  decodeTradeoff,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${status} ${code}: ${detail}`);
    this.name = "ApiError";
  }
}

export interface CostInput {
  cost_false_genuine: number;
  cost_false_counterfeit: number;
  cost_reject: number;
}

export interface AuthenticateInput {
  image: Blob;
  filename: string;
  deviceId: string;
  venue: string;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class MarkguardClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await response.text();
    if (!response.ok) {
      let code = "error";
      let detail = body;
      try {
        const parsed = JSON.parse(body) as { error?: unknown; detail?: unknown };
        if (typeof parsed.error === "string") code = parsed.error;
        if (typeof parsed.detail === "string") detail = parsed.detail;
      } catch {
        // non-JSON error body; keep the raw text as the detail
      }
      throw new ApiError(response.status, code, detail);
    }
    return body;
  }

  async authenticate(input: AuthenticateInput): Promise<AuthRecord> {
    const form = new FormData();
    form.append("image", input.image, input.filename);
    form.append("device_id", input.deviceId);
    form.append("venue", input.venue);
    const body = await this.request("/v1/authenticate", { method: "POST", body: form });
    return decodeAuthRecord(parseRaw(body));
  }

  async submitFeedback(
    requestId: string,
    expertLabel: "genuine" | "counterfeit",
    submitter: string,
  ): Promise<FeedbackRecordWire> {
    const body = await this.request("/v1/feedback", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ request_id: requestId, expert_label: expertLabel, submitter }),
    });
    return decodeFeedbackRecord(parseRaw(body));
  }

  async setThresholds(costs: CostInput): Promise<BandWire> {
    const body = await this.request("/v1/thresholds", {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(costs),
    });
    return decodeBand(parseRaw(body));
  }

  async metrics(): Promise<MetricsWire> {
    return decodeMetrics(parseRaw(await this.request("/v1/metrics")));
  }

  async models(): Promise<ModelEntryWire[]> {
    return decodeModels(parseRaw(await this.request("/v1/models")));
  }

  async activateModel(version: string): Promise<ActivationWire> {
    const body = await this.request(`/v1/models/${encodeURIComponent(version)}/activate`, {
      method: "POST",
    });
    return decodeActivation(parseRaw(body));
  }

  async tradeoff(): Promise<TradeoffWire> {
    return decodeTradeoff(parseRaw(await this.request("/v1/tradeoff")));
  }
}
