/** Form state and validation: raw input strings are kept as typed, so the
 * request carries exactly the numbers the user entered (Number() parsing,
 * no rounding or reformatting on the way out). */

import { FeatureRange, Perturbation, PredictionRequest } from "./types.js";

export interface FormState {
  state: string;
  fields: Record<string, string>; // raw text per numeric input
  perturbations: Map<string, number>; // active slider values per field
}

export function emptyForm(features: FeatureRange[]): FormState {
  const fields: Record<string, string> = {};
  for (const f of features) {
    fields[f.name] = "";
  }
  return { state: "", fields, perturbations: new Map() };
}

/** null when the raw text is a finite number, else the complaint. */
export function fieldError(raw: string): string | null {
  if (raw.trim() === "") {
    return "required";
  }
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    return "must be a number";
  }
  return null;
}

export function formIsValid(form: FormState): boolean {
  if (!form.state) {
    return false;
  }
  return Object.values(form.fields).every((raw) => fieldError(raw) === null);
}

/** Lossless form -> request mapping; only call on a valid form. */
export function buildRequest(form: FormState): PredictionRequest {
  const request: PredictionRequest = { state: form.state };
  for (const [name, raw] of Object.entries(form.fields)) {
    request[name] = Number(raw);
  }
  return request;
}

export function activePerturbations(form: FormState): Perturbation[] {
  return [...form.perturbations.entries()].map(([field, value]) => ({ field, value }));
}

/** Slider bounds: the training range widened by a full span on each side
 * (floored at zero: these are physical quantities), so out-of-distribution
 * scenarios stay reachable. */
export function sliderBounds(range: FeatureRange): { min: number; max: number } {
  const span = range.max - range.min;
  return { min: Math.max(0, range.min - span), max: range.max + span };
}
