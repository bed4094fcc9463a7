/** Wire types of the prediction service. */

export interface PredictionRequest {
  state: string;
  [numericField: string]: string | number;
}

export interface PredictionResponse {
  yield_t_per_ha: number;
  yield_bags_per_ha: number;
  model_kind: string;
  format_version: number;
}

export interface FeatureRange {
  name: string;
  min: number;
  max: number;
}

export interface HealthInfo {
  status: string;
  model_kind: string;
  format_version: number;
  uptime_s: number;
  bags_per_tonne: number;
  states: string[];
  features: FeatureRange[];
}

export interface Perturbation {
  field: string;
  value: number;
}

export interface ServiceErrorBody {
  error: string;
  detail: string;
}

/** Non-2xx response, decoded. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}
