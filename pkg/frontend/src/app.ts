/** Console wiring: tab routing, event handling, and calls into the API client. */

import { ApiError, MarkguardClient } from "./api/client.js";
import type {
  AuthRecord,
  BandWire,
  MetricsWire,
  ModelEntryWire,
  RawCostFields,
  TradeoffWire,
} from "./api/types.js";
import type { PreviewInfo } from "./views/authenticate.js";
import { renderAuthenticateForm, renderAuthError, renderResultCard } from "./views/authenticate.js";
import type { HistoryEntry } from "./views/history.js";
import { renderHistory } from "./views/history.js";
import { renderBand, renderThresholds, validateCosts } from "./views/thresholds.js";

type Tab = "authenticate" | "history" | "thresholds";

interface AppState {
  tab: Tab;
  history: HistoryEntry[];
  metrics: MetricsWire | null;
  models: ModelEntryWire[];
  tradeoff: TradeoffWire | null;
  /** Last band the service returned this session; marks the gauges. */
  band: BandWire | null;
  lastRecord: AuthRecord | null;
  lastPreview: PreviewInfo | null;
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.code} (${err.status}): ${err.detail}`;
  }
  return err instanceof Error ? err.message : String(err);
}

/** Object URL plus natural dimensions, for the thumbnail and bbox overlay. */
function loadPreview(file: Blob): Promise<PreviewInfo> {
  const url = URL.createObjectURL(file);
  return new Promise((resolve, reject) => {
    const probe = new Image();
    probe.onload = () => resolve({ url, width: probe.naturalWidth, height: probe.naturalHeight });
    probe.onerror = () => {
      URL.revokeObjectURL(url);
      reject(new Error("the browser cannot preview this file as an image"));
    };
    probe.src = url;
  });
}

export function startApp(root: HTMLElement, baseUrl: string): void {
  const client = new MarkguardClient(baseUrl);
  const state: AppState = {
    tab: "authenticate",
    history: [],
    metrics: null,
    models: [],
    tradeoff: null,
    band: null,
    lastRecord: null,
    lastPreview: null,
  };

  const nav = document.createElement("nav");
  const main = document.createElement("main");
  root.append(nav, main);

  function renderNav(): void {
    const tabs: Tab[] = ["authenticate", "history", "thresholds"];
    nav.innerHTML = tabs
      .map(
        (tab) =>
          `<button type="button" class="tab${tab === state.tab ? " tab-active" : ""}" data-tab="${tab}">${tab}</button>`,
      )
      .join("");
  }

  function switchTab(tab: Tab): void {
    state.tab = tab;
    renderNav();
    if (tab === "authenticate") {
      renderAuthenticateTab();
    } else if (tab === "history") {
      void renderHistoryTab();
    } else {
      void renderThresholdsTab();
    }
  }

  nav.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const tab = target.dataset["tab"] as Tab | undefined;
    if (tab) switchTab(tab);
  });

  // delegated once: thresholds re-renders must not stack activate handlers
  main.addEventListener("click", onActivateClick);

  // --- authenticate -------------------------------------------------------

  function entryFor(requestId: string): HistoryEntry | undefined {
    return state.history.find((e) => e.record.request_id === requestId);
  }

  function renderLastResult(result: HTMLElement): void {
    if (state.lastRecord === null) return;
    const entry = entryFor(state.lastRecord.request_id);
    result.innerHTML = renderResultCard(state.lastRecord, {
      preview: state.lastPreview ?? undefined,
      band: state.band,
      feedback: entry?.feedback,
    });
  }

  function renderAuthenticateTab(): void {
    main.innerHTML = renderAuthenticateForm();
    const form = main.querySelector<HTMLFormElement>("#auth-form")!;
    const result = main.querySelector<HTMLElement>("#auth-result")!;
    const status = main.querySelector<HTMLElement>("#auth-status")!;
    renderLastResult(result);

    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const fileInput = main.querySelector<HTMLInputElement>("#auth-image")!;
      const file = fileInput.files?.[0];
      if (!file) {
        status.textContent = "Pick an image first.";
        return;
      }
      const deviceId = main.querySelector<HTMLInputElement>("#auth-device")!.value || "unknown";
      const venue = main.querySelector<HTMLSelectElement>("#auth-venue")!.value;
      status.textContent = "Submitting…";
      Promise.all([
        client.authenticate({ image: file, filename: file.name, deviceId, venue }),
        loadPreview(file).catch(() => null),
      ])
        .then(([record, preview]) => {
          status.textContent = "";
          state.history.unshift({ record });
          state.lastRecord = record;
          state.lastPreview = preview;
          renderLastResult(result);
        })
        .catch((err: unknown) => {
          // failed submissions never enter the session history
          status.textContent = "";
          result.innerHTML = renderAuthError(describeError(err));
        });
    });

    result.addEventListener("click", (event) => {
      const button = (event.target as HTMLElement).closest<HTMLButtonElement>(".feedback-btn");
      if (!button) return;
      const holder = button.closest<HTMLElement>(".feedback");
      const requestId = holder?.dataset["request"];
      const label = button.dataset["label"];
      if (!requestId || (label !== "genuine" && label !== "counterfeit")) return;
      client
        .submitFeedback(requestId, label, "console")
        .then(() => {
          const entry = entryFor(requestId);
          if (entry) entry.feedback = label;
          renderLastResult(result);
        })
        .catch((err: unknown) => {
          result.innerHTML += renderAuthError(describeError(err));
        });
    });
  }

  // --- history ------------------------------------------------------------

  async function renderHistoryTab(): Promise<void> {
    try {
      state.metrics = await client.metrics();
    } catch {
      state.metrics = null;
    }
    main.innerHTML = renderHistory(state.history, state.metrics);
    main.querySelector("#metrics-refresh")?.addEventListener("click", () => void renderHistoryTab());
  }

  // --- thresholds ---------------------------------------------------------

  function readCostFields(): RawCostFields {
    const read = (id: string): string => main.querySelector<HTMLInputElement>(id)!.value;
    return {
      cost_false_genuine: read("#cost-fg"),
      cost_false_counterfeit: read("#cost-fc"),
      cost_reject: read("#cost-rej"),
    };
  }

  function showFieldErrors(errors: Record<string, string>): void {
    for (const span of main.querySelectorAll<HTMLElement>(".field-error")) {
      span.textContent = errors[span.dataset["for"] ?? ""] ?? "";
    }
  }

  async function renderThresholdsTab(): Promise<void> {
    try {
      state.models = await client.models();
    } catch {
      state.models = [];
    }
    try {
      state.tradeoff = await client.tradeoff();
    } catch {
      state.tradeoff = null;
    }
    main.innerHTML = renderThresholds(state.models, state.tradeoff, state.band);
    if (state.band !== null) {
      main.querySelector<HTMLElement>("#band-result")!.innerHTML = renderBand(state.band);
    }

    const form = main.querySelector<HTMLFormElement>("#cost-form")!;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const status = main.querySelector<HTMLElement>("#cost-status")!;
      const fields = readCostFields();
      const errors = validateCosts(fields);
      showFieldErrors(errors);
      if (Object.keys(errors).length > 0) return; // nothing is sent on invalid input
      status.textContent = "Recalibrating…";
      client
        .setThresholds({
          cost_false_genuine: Number(fields.cost_false_genuine),
          cost_false_counterfeit: Number(fields.cost_false_counterfeit),
          cost_reject: Number(fields.cost_reject),
        })
        .then(async (band) => {
          state.band = band;
          // re-render so the curve highlights the new band on every gauge
          await renderThresholdsTab();
          restoreCostFields(fields);
        })
        .catch((err: unknown) => {
          if (err instanceof ApiError && err.status === 422) {
            // the service rejected the matrix itself; show it on the reject field
            showFieldErrors({ cost_reject: err.detail });
            status.textContent = "";
            return;
          }
          status.textContent = describeError(err);
        });
    });
  }

  function restoreCostFields(fields: RawCostFields): void {
    main.querySelector<HTMLInputElement>("#cost-fg")!.value = fields.cost_false_genuine;
    main.querySelector<HTMLInputElement>("#cost-fc")!.value = fields.cost_false_counterfeit;
    main.querySelector<HTMLInputElement>("#cost-rej")!.value = fields.cost_reject;
  }

  function onActivateClick(event: Event): void {
    const button = (event.target as HTMLElement).closest<HTMLButtonElement>(".activate-btn");
    const version = button?.dataset["version"];
    if (!button || !version) return;
    button.disabled = true;
    client
      .activateModel(version)
      .then(() => renderThresholdsTab())
      .catch((err: unknown) => {
        button.disabled = false;
        button.insertAdjacentHTML("afterend", ` <span class="status">${describeError(err)}</span>`);
      });
  }

  switchTab("authenticate");
}
