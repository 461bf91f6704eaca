/**
 * Contract tests: the client against recorded service responses.
 *
 * A local HTTP server replays the exact bytes the service produced, so
 * every assertion about decoded fields is an assertion about the real
 * wire format. The replay routes mirror the service's error behavior.
 */

import { createServer, type IncomingMessage, type Server, type ServerResponse } from "node:http";
import type { AddressInfo } from "node:net";
import { afterAll, beforeAll, beforeEach, describe, expect, it } from "vitest";

import { ApiError, MarkguardClient } from "../src/api/client.js";
import { fixtureBytes, fixtureStatus, fixtureText, rawField } from "./fixtures.js";

interface SeenRequest {
  method: string;
  url: string;
  contentType: string;
  body: string;
}

let server: Server;
let client: MarkguardClient;
const seen: SeenRequest[] = [];
let authenticateMode: "ok" | "no-model" | "plain-error" = "ok";

function reply(res: ServerResponse, name: string): void {
  res.writeHead(fixtureStatus(name), { "content-type": "application/json" });
  res.end(fixtureBytes(name));
}

async function handle(req: IncomingMessage, res: ServerResponse): Promise<void> {
  const chunks: Buffer[] = [];
  for await (const chunk of req) chunks.push(chunk as Buffer);
  const body = Buffer.concat(chunks).toString("utf8");
  const url = req.url ?? "";
  seen.push({
    method: req.method ?? "",
    url,
    contentType: req.headers["content-type"] ?? "",
    body,
  });

  if (req.method === "POST" && url === "/v1/authenticate") {
    if (authenticateMode === "no-model") return reply(res, "error_no_model");
    if (authenticateMode === "plain-error") {
      res.writeHead(500, { "content-type": "text/plain" });
      return res.end("backend fell over");
    }
    if (body.includes("mars")) return reply(res, "error_bad_venue");
    return reply(res, "authenticate_genuine");
  }
  if (req.method === "POST" && url === "/v1/feedback") {
    const parsed = JSON.parse(body) as { request_id: string; expert_label: string };
    if (parsed.request_id === "no-such-request") return reply(res, "error_unknown_request");
    if (parsed.expert_label !== "genuine" && parsed.expert_label !== "counterfeit") {
      return reply(res, "error_bad_label");
    }
    return reply(res, "feedback");
  }
  if (req.method === "PUT" && url === "/v1/thresholds") return reply(res, "thresholds");
  if (req.method === "GET" && url === "/v1/metrics") return reply(res, "metrics");
  if (req.method === "GET" && url === "/v1/models") return reply(res, "models");
  if (req.method === "POST" && url === "/v1/models/m-fixture01/activate") {
    return reply(res, "activate");
  }
  if (req.method === "POST" && url.endsWith("/activate")) {
    return reply(res, "error_unknown_model");
  }
  if (req.method === "GET" && url === "/v1/tradeoff") return reply(res, "tradeoff");
  res.writeHead(404, { "content-type": "application/json" });
  res.end('{"error": "unknown request", "detail": "no such route"}');
}

beforeAll(async () => {
  server = createServer((req, res) => void handle(req, res));
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const { port } = server.address() as AddressInfo;
  client = new MarkguardClient(`http://127.0.0.1:${port}`);
});

afterAll(() => {
  server.close();
});

beforeEach(() => {
  seen.length = 0;
  authenticateMode = "ok";
});

function lastRequest(): SeenRequest {
  const last = seen[seen.length - 1];
  if (!last) throw new Error("no request reached the replay server");
  return last;
}

describe("authenticate", () => {
  it("posts multipart form data and decodes the record", async () => {
    const image = new Blob([new Uint8Array([137, 80, 78, 71])], { type: "image/png" });
    const record = await client.authenticate({
      image,
      filename: "capture.png",
      deviceId: "desk-1",
      venue: "retail",
    });

    const sent = lastRequest();
    expect(sent.contentType).toMatch(/^multipart\/form-data/);
    expect(sent.body).toContain('name="image"');
    expect(sent.body).toContain('filename="capture.png"');
    expect(sent.body).toContain('name="device_id"');
    expect(sent.body).toContain("desk-1");
    expect(sent.body).toContain('name="venue"');
    expect(sent.body).toContain("retail");

    expect(record.result.verdict.label).toBe("GENUINE");
    expect(record.result.thresholds_version).toBe("t-live02");
    expect(record.capture_meta?.device_id).toBe("desk-1");
    expect(record.result.detection?.confidence.text).toBe(rawField("authenticate_genuine", "confidence"));
    expect(record.result.detection?.bbox.x0.text).toBe("8.0");
  });

  it("preserves the score text byte for byte", async () => {
    const image = new Blob([new Uint8Array(4)], { type: "image/png" });
    const record = await client.authenticate({
      image,
      filename: "capture.png",
      deviceId: "desk-1",
      venue: "retail",
    });
    const wireText = rawField("authenticate_genuine", "value");
    expect(record.result.score?.value.text).toBe(wireText);
    expect(fixtureText("authenticate_genuine")).toContain(`"value":${wireText}`);
  });

  it("maps a rejected venue to an ApiError with the service's code", async () => {
    const image = new Blob([new Uint8Array(4)], { type: "image/png" });
    const attempt = client.authenticate({ image, filename: "x.png", deviceId: "d", venue: "mars" });
    await expect(attempt).rejects.toMatchObject({
      name: "ApiError",
      status: fixtureStatus("error_bad_venue"),
      code: "unknown venue",
    });
  });

  it("maps the no-active-model error to 503", async () => {
    authenticateMode = "no-model";
    const image = new Blob([new Uint8Array(4)], { type: "image/png" });
    const attempt = client.authenticate({ image, filename: "x.png", deviceId: "d", venue: "retail" });
    await expect(attempt).rejects.toMatchObject({ status: 503, code: "no active model" });
  });

  it("keeps a non-JSON error body as the detail", async () => {
    authenticateMode = "plain-error";
    const image = new Blob([new Uint8Array(4)], { type: "image/png" });
    const attempt = client.authenticate({ image, filename: "x.png", deviceId: "d", venue: "retail" });
    await expect(attempt).rejects.toMatchObject({
      status: 500,
      code: "error",
      detail: "backend fell over",
    });
    await expect(attempt).rejects.toBeInstanceOf(ApiError);
  });
});

describe("feedback", () => {
  it("submits the expert label and decodes the stored record", async () => {
    const record = await client.submitFeedback(
      "0baad5f4d2c54a10b0acb7bc6c242af3",
      "genuine",
      "console",
    );
    expect(JSON.parse(lastRequest().body)).toEqual({
      request_id: "0baad5f4d2c54a10b0acb7bc6c242af3",
      expert_label: "genuine",
      submitter: "console",
    });
    expect(record.expert_label).toBe("genuine");
    expect(record.submitter).toBe("console");
  });

  it("maps an unknown request id to 404", async () => {
    await expect(client.submitFeedback("no-such-request", "genuine", "console")).rejects.toMatchObject({
      status: 404,
      code: "unknown request",
    });
  });
});

describe("thresholds and tradeoff", () => {
  it("sends the cost matrix and preserves the band bytes", async () => {
    const band = await client.setThresholds({
      cost_false_genuine: 1.0,
      cost_false_counterfeit: 1.0,
      cost_reject: 0.5,
    });
    expect(lastRequest().method).toBe("PUT");
    expect(JSON.parse(lastRequest().body)).toEqual({
      cost_false_genuine: 1,
      cost_false_counterfeit: 1,
      cost_reject: 0.5,
    });
    expect(band.lower.text).toBe(rawField("thresholds", "lower"));
    expect(band.lower.text).toBe("0.29000000000000004");
    expect(band.version).toMatch(/^cal-[0-9a-f]{12}$/);
  });

  it("decodes every tradeoff point with its wire text intact", async () => {
    const tradeoff = await client.tradeoff();
    const raw = fixtureText("tradeoff");
    expect(tradeoff.points.length).toBeGreaterThan(0);
    for (const point of tradeoff.points) {
      expect(raw).toContain(`"rejection_budget":${point.rejection_budget.text}`);
      expect(raw).toContain(`"best_accuracy":${point.best_accuracy.text}`);
      expect(raw).toContain(`"achieved_rejection":${point.achieved_rejection.text}`);
    }
    const first = tradeoff.points[0]!;
    expect(first.rejection_budget.text).toBe("0.0");
    expect(first.band.lower.text).toBe("0.29000000000000004");
  });
});

describe("metrics and models", () => {
  it("keeps counter and rate text as sent", async () => {
    const metrics = await client.metrics();
    expect(metrics.requests_total.text).toBe(rawField("metrics", "requests_total"));
    expect(metrics.rejection_rate.text).toBe("0.3333333333333333");
    expect(metrics.feedback_agreement?.text).toBe("1.0");
    expect(metrics.verdicts.GENUINE.text).toBe("1");
    expect(metrics.active_model_version).toBe("m-live02");
  });

  it("lists registered models", async () => {
    const models = await client.models();
    expect(models).toHaveLength(1);
    expect(models[0]).toMatchObject({ version: "m-fixture01", architecture: "small-conv", active: true });
    expect(models[0]!.weight_count.text).toBe(rawField("models", "weight_count"));
  });

  it("activates a model by version, URL-encoding it", async () => {
    const activation = await client.activateModel("m-fixture01");
    expect(lastRequest().url).toBe("/v1/models/m-fixture01/activate");
    expect(activation.active_model_version).toBe("m-fixture01");

    await expect(client.activateModel("m/odd version")).rejects.toMatchObject({
      status: 404,
      code: "unknown model version",
    });
    expect(lastRequest().url).toBe("/v1/models/m%2Fodd%20version/activate");
  });
});
