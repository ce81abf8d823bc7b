import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { paramNumber, paramRest, parseReport, ReportError } from "../src/csv.js";

const FIXTURE = new URL("./fixtures/report.csv", import.meta.url);

describe("parseReport", () => {
  it("reads the producer schema", () => {
    const rows = parseReport(readFileSync(FIXTURE, "utf-8"));
    expect(rows.length).toBe(20);
    const dist = rows.filter((r) => r.quantity === "distance_d_to_limit");
    expect(dist.length).toBe(4);
    for (const row of dist) {
      expect(row.bound).not.toBeNull();
      expect(row.slack).toBeCloseTo((row.bound as number) - row.value, 10);
      expect(row.pass).toBe(true);
    }
    const roots = rows.filter((r) => r.quantity === "value_root");
    expect(roots.length).toBe(3);
    for (const row of roots) {
      expect(row.bound).toBeNull();
      expect(row.slack).toBeNull();
    }
  });

  it("rejects missing or renamed columns", () => {
    expect(() => parseReport("a,b,c\n1,2,3\n")).toThrow(ReportError);
    const renamed = readFileSync(FIXTURE, "utf-8").replace("quantity", "metric");
    expect(() => parseReport(renamed)).toThrow(/misnamed/);
    expect(() => parseReport("")).toThrow(ReportError);
  });

  it("rejects malformed numeric fields", () => {
    const header = "experiment,instance,param,quantity,value,bound,slack,pass";
    expect(() => parseReport(`${header}\ne,i,p,q,oops,1.0,1.0,true\n`)).toThrow(/bad numeric/);
    expect(() => parseReport(`${header}\ne,i,p,q,,1.0,1.0,true\n`)).toThrow(/missing its value/);
  });
});

describe("param helpers", () => {
  it("extracts numeric keys", () => {
    expect(paramNumber("beta=0.5;n=16", "n")).toBe(16);
    expect(paramNumber("beta=0.5;n=16", "beta")).toBe(0.5);
    expect(paramNumber("beta=0.5;n=16", "m")).toBeNull();
    expect(paramNumber("all", "n")).toBeNull();
  });

  it("groups by the remaining keys", () => {
    expect(paramRest("beta=0.5;n=16", "n")).toBe("beta=0.5");
    expect(paramRest("n=16", "n")).toBe("");
  });
});
