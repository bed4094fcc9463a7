import { describe, expect, it } from "vitest";

import { correlationLabel, parseCorrelationReport } from "../src/guidance.js";

const REPORT = [
  "variable,tau,rank,selected",
  "avg_precip_mm,-0.265,4,1",
  "silt_pct,0.288,2,1",
  "cultivation_area_ha,0.555,1,1",
  "clay_pct,-0.001,10,0",
].join("\n");

describe("correlation report parsing", () => {
  it("orders entries by rank", () => {
    const entries = parseCorrelationReport(REPORT);
    expect(entries).not.toBeNull();
    expect(entries!.map((e) => e.variable)).toEqual([
      "cultivation_area_ha",
      "silt_pct",
      "avg_precip_mm",
      "clay_pct",
    ]);
    expect(entries![0].rank).toBe(1); // cultivation area ranks first
    expect(entries![0].selected).toBe(true);
    expect(entries![3].selected).toBe(false);
  });

  it("labels signs", () => {
    const entries = parseCorrelationReport(REPORT)!;
    const silt = entries.find((e) => e.variable === "silt_pct")!;
    const precip = entries.find((e) => e.variable === "avg_precip_mm")!;
    expect(silt.tau).toBeGreaterThan(0);
    expect(correlationLabel(silt.tau)).toBe("pulls yield up");
    expect(correlationLabel(precip.tau)).toBe("pulls yield down");
    expect(correlationLabel(0)).toBe("no association");
  });

  it("returns null for anything that is not the report", () => {
    expect(parseCorrelationReport("")).toBeNull();
    expect(parseCorrelationReport("<html>404</html>")).toBeNull();
    expect(parseCorrelationReport("variable,tau,rank,selected")).toBeNull();
    expect(parseCorrelationReport("variable,tau,rank,selected\nx,not-a-number,1,1")).toBeNull();
  });
});
