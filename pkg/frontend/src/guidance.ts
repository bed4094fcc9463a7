/** Static per-variable guidance from the shipped correlation report:
 * which way each input pulls yield, and how strongly it ranks. */

export interface GuidanceEntry {
  variable: string;
  tau: number;
  rank: number;
  selected: boolean;
}

/** Parse the report CSV (variable,tau,rank,selected); rank-ascending.
 * Returns null for anything that does not look like the report, so a
 * missing or mangled file just hides the panel. */
export function parseCorrelationReport(text: string): GuidanceEntry[] | null {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length < 2 || lines[0].trim() !== "variable,tau,rank,selected") {
    return null;
  }
  const entries: GuidanceEntry[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== 4) {
      return null;
    }
    const tau = Number(parts[1]);
    const rank = Number(parts[2]);
    if (!Number.isFinite(tau) || !Number.isInteger(rank)) {
      return null;
    }
    entries.push({
      variable: parts[0],
      tau,
      rank,
      selected: parts[3].trim() === "1",
    });
  }
  entries.sort((a, b) => a.rank - b.rank);
  return entries;
}

export function correlationLabel(tau: number): string {
  if (tau > 0) {
    return "pulls yield up";
  }
  if (tau < 0) {
    return "pulls yield down";
  }
  return "no association";
}
