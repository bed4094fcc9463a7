import { ApiClient } from "./api.js";
import { WhatIfApp } from "./app.js";

declare global {
  interface Window {
    CORNYIELD_BASE_URL?: string;
  }
}

async function loadGuidance(): Promise<string | null> {
  try {
    const resp = await fetch("correlation_report.csv");
    return resp.ok ? await resp.text() : null;
  } catch {
    return null;
  }
}

async function bootstrap(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const client = new ApiClient(window.CORNYIELD_BASE_URL ?? "http://127.0.0.1:8000");
  const app = new WhatIfApp(root, client, { guidanceCsv: await loadGuidance() });
  try {
    await app.init();
  } catch {
    root.textContent = "prediction service unreachable; is `cornyield serve` running?";
  }
}

document.addEventListener("DOMContentLoaded", () => void bootstrap());
