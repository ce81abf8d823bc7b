/**
 * Strict reader for the experiment report schema.
 *
 * The producer writes `experiment,instance,param,quantity,value,bound,slack,pass`
 * (UTF-8, LF); rendering must never mutate the file, so this module only parses.
 */

import Papa from "papaparse";

export const REQUIRED_HEADER = [
  "experiment",
  "instance",
  "param",
  "quantity",
  "value",
  "bound",
  "slack",
  "pass",
] as const;

export interface ResultRow {
  experiment: string;
  instance: string;
  param: string;
  quantity: string;
  value: number;
  bound: number | null;
  slack: number | null;
  pass: boolean;
}

export class ReportError extends Error {}

function numberOrNull(field: string, where: string): number | null {
  if (field === "") return null;
  const x = Number(field);
  if (!Number.isFinite(x)) throw new ReportError(`bad numeric field ${JSON.stringify(field)} in ${where}`);
  return x;
}

export function parseReport(text: string): ResultRow[] {
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new ReportError(`CSV parse error: ${parsed.errors[0].message}`);
  }
  const lines = parsed.data;
  if (lines.length === 0) {
    throw new ReportError("empty report");
  }
  const header = lines[0];
  const expected = REQUIRED_HEADER.join(",");
  if (header.join(",") !== expected) {
    throw new ReportError(`missing or misnamed columns: expected "${expected}", got "${header.join(",")}"`);
  }
  return lines.slice(1).map((fields, i) => {
    if (fields.length !== REQUIRED_HEADER.length) {
      throw new ReportError(`row ${i + 2} has ${fields.length} fields`);
    }
    const value = numberOrNull(fields[4], `row ${i + 2}`);
    if (value === null) throw new ReportError(`row ${i + 2} is missing its value`);
    return {
      experiment: fields[0],
      instance: fields[1],
      param: fields[2],
      quantity: fields[3],
      value,
      bound: numberOrNull(fields[5], `row ${i + 2}`),
      slack: numberOrNull(fields[6], `row ${i + 2}`),
      pass: fields[7] === "true",
    };
  });
}

/** Numeric value of one key inside a `k1=v1;k2=v2` param string, else null. */
export function paramNumber(param: string, key: string): number | null {
  for (const piece of param.split(";")) {
    const eq = piece.indexOf("=");
    if (eq < 0) continue;
    if (piece.slice(0, eq) === key) {
      const x = Number(piece.slice(eq + 1));
      return Number.isFinite(x) ? x : null;
    }
  }
  return null;
}

/** The param string with one key removed; groups series that differ only in that key. */
export function paramRest(param: string, key: string): string {
  return param
    .split(";")
    .filter((piece) => !piece.startsWith(`${key}=`))
    .join(";");
}
