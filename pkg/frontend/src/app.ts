/** The single-page what-if client.
 *
 * One form, one result card, one scenario panel. Every number on screen is
 * rendered with String() straight off a service response; the only local
 * arithmetic is the delta between two service numbers, shown next to its
 * direction arrow. Responses are applied in request order: each action
 * channel carries a sequence number and stale arrivals are dropped.
 */

import { ApiClient } from "./api.js";
import { correlationLabel, GuidanceEntry, parseCorrelationReport } from "./guidance.js";
import {
  activePerturbations,
  buildRequest,
  emptyForm,
  fieldError,
  FormState,
  formIsValid,
  sliderBounds,
} from "./state.js";
import { ApiError, HealthInfo, PredictionRequest, PredictionResponse } from "./types.js";

export interface AppOptions {
  guidanceCsv?: string | null; // report text bundled at build, if any
}

export class WhatIfApp {
  form!: FormState;
  health!: HealthInfo;
  private base: PredictionResponse | null = null;
  private baseRequest: PredictionRequest | null = null;
  private predictSeq = 0;
  private whatifSeq = 0;
  /** test hook: resolves when the latest action settled */
  lastAction: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly options: AppOptions = {},
  ) {}

  async init(): Promise<void> {
    this.health = await this.client.health();
    this.form = emptyForm(this.health.features);
    this.render();
  }

  // -- layout ----------------------------------------------------------------

  private render(): void {
    this.root.innerHTML = "";
    this.root.appendChild(this.banner());
    this.root.appendChild(this.formSection());
    this.root.appendChild(this.resultSection());
    this.root.appendChild(this.scenarioSection());
    const guidance = this.guidanceSection();
    if (guidance) {
      this.root.appendChild(guidance);
    }
    this.refreshValidity();
  }

  private element(tag: string, id: string, text = ""): HTMLElement {
    const el = document.createElement(tag);
    el.id = id;
    if (text) {
      el.textContent = text;
    }
    return el;
  }

  private banner(): HTMLElement {
    const el = this.element("div", "error-banner");
    el.hidden = true;
    return el;
  }

  private formSection(): HTMLElement {
    const section = this.element("section", "form-section");

    const stateLabel = document.createElement("label");
    stateLabel.textContent = "state";
    const select = document.createElement("select");
    select.id = "state";
    const placeholder = document.createElement("option");
    placeholder.value = "";
    placeholder.textContent = "choose a state";
    select.appendChild(placeholder);
    for (const state of this.health.states) {
      const option = document.createElement("option");
      option.value = state;
      option.textContent = state;
      select.appendChild(option);
    }
    select.addEventListener("change", () => {
      this.form.state = select.value;
      this.refreshValidity();
    });
    stateLabel.appendChild(select);
    section.appendChild(stateLabel);

    for (const feature of this.health.features) {
      const label = document.createElement("label");
      label.textContent = feature.name;
      const input = document.createElement("input");
      input.type = "text";
      input.id = `field-${feature.name}`;
      input.addEventListener("input", () => {
        this.form.fields[feature.name] = input.value;
        this.refreshValidity();
      });
      label.appendChild(input);
      const error = this.element("span", `field-error-${feature.name}`);
      error.className = "field-error";
      label.appendChild(error);
      section.appendChild(label);
    }

    const button = this.element("button", "predict-btn", "predict") as HTMLButtonElement;
    button.addEventListener("click", () => void this.submitPrediction());
    section.appendChild(button);
    return section;
  }

  private resultSection(): HTMLElement {
    const section = this.element("section", "result-section");
    section.hidden = true;
    section.appendChild(this.element("div", "base-yield"));
    section.appendChild(this.element("div", "base-bags"));
    section.appendChild(this.element("div", "model-kind"));
    return section;
  }

  private scenarioSection(): HTMLElement {
    const section = this.element("section", "scenario-section");
    section.hidden = true;
    const sliders = this.element("div", "sliders");
    for (const feature of this.health.features) {
      const label = document.createElement("label");
      label.textContent = `${feature.name} scenario`;
      const bounds = sliderBounds(feature);
      const slider = document.createElement("input");
      slider.type = "range";
      slider.id = `slider-${feature.name}`;
      slider.min = String(bounds.min);
      slider.max = String(bounds.max);
      slider.step = "any";
      // whatif fires on release (change), not on every drag tick
      slider.addEventListener("change", () => {
        void this.onSliderRelease(feature.name, Number(slider.value));
      });
      label.appendChild(slider);
      const reset = document.createElement("button");
      reset.id = `reset-${feature.name}`;
      reset.textContent = "reset";
      reset.addEventListener("click", () => void this.onSliderReset(feature.name));
      label.appendChild(reset);
      sliders.appendChild(label);
    }
    section.appendChild(sliders);
    section.appendChild(this.element("div", "scenarios"));
    return section;
  }

  private guidanceSection(): HTMLElement | null {
    const csv = this.options.guidanceCsv;
    const entries: GuidanceEntry[] | null = csv ? parseCorrelationReport(csv) : null;
    if (!entries) {
      return null;
    }
    const section = this.element("section", "guidance-section");
    section.appendChild(this.element("h2", "guidance-title", "what moves yield"));
    for (const entry of entries) {
      const row = this.element("div", `guidance-${entry.variable}`);
      row.className = "guidance-row";
      row.dataset.sign = entry.tau > 0 ? "positive" : entry.tau < 0 ? "negative" : "zero";
      row.dataset.rank = String(entry.rank);
      row.textContent = `#${entry.rank} ${entry.variable}: ${correlationLabel(entry.tau)}`;
      section.appendChild(row);
    }
    return section;
  }

  // -- interactions -----------------------------------------------------------

  private refreshValidity(): void {
    for (const feature of this.health.features) {
      const message = fieldError(this.form.fields[feature.name]);
      const span = this.root.querySelector<HTMLElement>(`#field-error-${feature.name}`);
      if (span) {
        span.textContent = this.form.fields[feature.name].trim() === "" ? "" : message ?? "";
      }
    }
    const button = this.root.querySelector<HTMLButtonElement>("#predict-btn");
    if (button) {
      button.disabled = !formIsValid(this.form);
    }
  }

  private submitPrediction(): Promise<void> {
    const seq = ++this.predictSeq;
    const request = buildRequest(this.form);
    const action = (async () => {
      try {
        const response = await this.client.predict(request);
        if (seq !== this.predictSeq) {
          return; // a newer submit superseded this one
        }
        this.base = response;
        this.baseRequest = request;
        this.form.perturbations.clear();
        this.hideBanner();
        this.renderBase();
        this.renderScenarios([]);
      } catch (error) {
        if (seq === this.predictSeq) {
          this.showError(error);
        }
      }
    })();
    this.lastAction = action;
    return action;
  }

  private onSliderRelease(field: string, value: number): Promise<void> {
    if (!this.baseRequest) {
      return Promise.resolve();
    }
    if (value === Number(this.baseRequest[field])) {
      this.form.perturbations.delete(field); // back to base: not a scenario
    } else {
      this.form.perturbations.set(field, value);
    }
    return this.exploreWhatif();
  }

  private onSliderReset(field: string): Promise<void> {
    if (!this.baseRequest) {
      return Promise.resolve();
    }
    const slider = this.root.querySelector<HTMLInputElement>(`#slider-${field}`);
    if (slider) {
      slider.value = String(this.baseRequest[field]);
    }
    this.form.perturbations.delete(field);
    return this.exploreWhatif();
  }

  private exploreWhatif(): Promise<void> {
    const perturbations = activePerturbations(this.form);
    if (perturbations.length === 0) {
      // nothing active: restore the base-only view without a round trip
      this.whatifSeq += 1;
      this.renderScenarios([]);
      this.lastAction = Promise.resolve();
      return this.lastAction;
    }
    const seq = ++this.whatifSeq;
    const base = this.baseRequest as PredictionRequest;
    const action = (async () => {
      try {
        const responses = await this.client.whatif(base, perturbations);
        if (seq !== this.whatifSeq) {
          return; // stale: a later slider release won the race
        }
        this.hideBanner();
        this.renderScenarios(
          perturbations.map((p, i) => ({
            field: p.field,
            base: responses[0],
            scenario: responses[i + 1],
          })),
        );
      } catch (error) {
        if (seq === this.whatifSeq) {
          this.showError(error);
        }
      }
    })();
    this.lastAction = action;
    return action;
  }

  // -- rendering ---------------------------------------------------------------

  private renderBase(): void {
    const base = this.base as PredictionResponse;
    const section = this.root.querySelector<HTMLElement>("#result-section");
    if (!section) {
      return;
    }
    section.hidden = false;
    // verbatim service numbers: String() of the parsed JSON values
    this.setText("#base-yield", `${String(base.yield_t_per_ha)} t/ha`);
    this.setText("#base-bags", `${String(base.yield_bags_per_ha)} bags/ha`);
    this.setText("#model-kind", base.model_kind);
    const scenario = this.root.querySelector<HTMLElement>("#scenario-section");
    if (scenario) {
      scenario.hidden = false;
    }
    for (const feature of this.health.features) {
      const slider = this.root.querySelector<HTMLInputElement>(`#slider-${feature.name}`);
      if (slider && this.baseRequest) {
        slider.value = String(this.baseRequest[feature.name]);
      }
    }
  }

  private renderScenarios(
    rows: { field: string; base: PredictionResponse; scenario: PredictionResponse }[],
  ): void {
    const host = this.root.querySelector<HTMLElement>("#scenarios");
    if (!host) {
      return;
    }
    host.innerHTML = "";
    for (const row of rows) {
      const el = document.createElement("div");
      el.className = "scenario-row";
      el.dataset.field = row.field;
      const delta = row.scenario.yield_t_per_ha - row.base.yield_t_per_ha;
      const arrow = delta > 0 ? "▲" : delta < 0 ? "▼" : "→";
      el.innerHTML = "";
      const baseCell = document.createElement("span");
      baseCell.className = "scenario-base";
      baseCell.textContent = String(row.base.yield_t_per_ha);
      const scenarioCell = document.createElement("span");
      scenarioCell.className = "scenario-yield";
      scenarioCell.textContent = String(row.scenario.yield_t_per_ha);
      const bagsCell = document.createElement("span");
      bagsCell.className = "scenario-bags";
      bagsCell.textContent = String(row.scenario.yield_bags_per_ha);
      const arrowCell = document.createElement("span");
      arrowCell.className = "scenario-arrow";
      arrowCell.dataset.direction = delta > 0 ? "up" : delta < 0 ? "down" : "flat";
      arrowCell.textContent = arrow;
      const deltaCell = document.createElement("span");
      deltaCell.className = "scenario-delta";
      deltaCell.textContent = String(delta);
      el.append(baseCell, scenarioCell, bagsCell, arrowCell, deltaCell);
      host.appendChild(el);
    }
  }

  private setText(selector: string, text: string): void {
    const el = this.root.querySelector<HTMLElement>(selector);
    if (el) {
      el.textContent = text;
    }
  }

  private showError(error: unknown): void {
    if (error instanceof ApiError && error.status === 400) {
      // inline where possible: the detail names the offending field
      for (const feature of this.health.features) {
        if (error.detail.includes(feature.name)) {
          this.setText(`#field-error-${feature.name}`, error.message);
          return;
        }
      }
      this.showBanner(error.message);
      return;
    }
    this.showBanner(error instanceof Error ? `service unreachable: ${error.message}`
                                           : "service unreachable");
  }

  private showBanner(message: string): void {
    const banner = this.root.querySelector<HTMLElement>("#error-banner");
    if (banner) {
      banner.hidden = false;
      banner.textContent = message;
    }
  }

  private hideBanner(): void {
    const banner = this.root.querySelector<HTMLElement>("#error-banner");
    if (banner) {
      banner.hidden = true;
      banner.textContent = "";
    }
  }
}
