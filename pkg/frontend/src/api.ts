/** Thin typed client for the prediction service. No numbers are computed
 * here and none are reformatted: responses pass through as parsed. */

import {
  ApiError,
  HealthInfo,
  Perturbation,
  PredictionRequest,
  PredictionResponse,
  ServiceErrorBody,
} from "./types.js";

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  async health(): Promise<HealthInfo> {
    const resp = await fetch(`${this.baseUrl}/health`);
    if (!resp.ok) {
      throw new ApiError(resp.status, "HealthUnavailable", `status ${resp.status}`);
    }
    return (await resp.json()) as HealthInfo;
  }

  async predict(request: PredictionRequest): Promise<PredictionResponse> {
    return (await this.post("/predict", request)) as PredictionResponse;
  }

  async whatif(
    base: PredictionRequest,
    perturbations: Perturbation[],
  ): Promise<PredictionResponse[]> {
    return (await this.post("/whatif", { base, perturbations })) as PredictionResponse[];
  }

  private async post(path: string, body: unknown): Promise<unknown> {
    const resp = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      let decoded: ServiceErrorBody = { error: `Http${resp.status}`, detail: "" };
      try {
        decoded = (await resp.json()) as ServiceErrorBody;
      } catch {
        // non-JSON error body: keep the status-derived code
      }
      throw new ApiError(resp.status, decoded.error, decoded.detail);
    }
    return resp.json();
  }
}
