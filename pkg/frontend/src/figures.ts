/**
 * Figure kinds over the report rows. All numerical work already happened in
 * the producer; this module only selects, scales and draws.
 */

import { paramNumber, paramRest, ReportError, ResultRow } from "./csv.js";
import {
  axes,
  circle,
  DEFAULT_FRAME,
  document,
  Frame,
  linearScale,
  logScale,
  polyline,
  rect,
  text,
} from "./svg.js";

export interface FigureSpec {
  input: string;
  kind: string;
  output: string;
  experiment?: string;
  quantity?: string;
  paramKey?: string;
  paramFilter?: string;
  title?: string;
}

const SERIES_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

function applyFilters(rows: ResultRow[], spec: FigureSpec, defaultQuantity?: string): ResultRow[] {
  let out = rows;
  if (spec.experiment) out = out.filter((r) => r.experiment === spec.experiment);
  const quantity = spec.quantity ?? defaultQuantity;
  if (quantity) out = out.filter((r) => r.quantity === quantity);
  if (spec.paramFilter) out = out.filter((r) => r.param.includes(spec.paramFilter as string));
  return out;
}

function emptyFigure(frame: Frame, title: string, xLabel: string, yLabel: string): string {
  const x = linearScale(0, 1, frame.left, frame.width - frame.right);
  const y = linearScale(0, 1, frame.height - frame.bottom, frame.top);
  return document(frame, [
    axes({ frame, xScale: x, yScale: y, title: `${title} (no rows)`, xLabel, yLabel }),
  ]);
}

/** Log-y decay curves with their bound overlays, one series per param group. */
export function renderConvergence(rows: ResultRow[], spec: FigureSpec): string {
  const frame = DEFAULT_FRAME;
  const key = spec.paramKey ?? "n";
  const picked = applyFilters(rows, spec, "distance_d_to_limit").filter(
    (r) => paramNumber(r.param, key) !== null && r.value > 0,
  );
  const title = spec.title ?? "distance to limit vs clipping level";
  if (picked.length === 0) return emptyFigure(frame, title, key, "value");
  const series = new Map<string, ResultRow[]>();
  for (const row of picked) {
    const groupKey = paramRest(row.param, key);
    const group = series.get(groupKey) ?? [];
    group.push(row);
    series.set(groupKey, group);
  }
  const xs = picked.map((r) => paramNumber(r.param, key) as number);
  const ys = picked.flatMap((r) => (r.bound !== null && r.bound > 0 ? [r.value, r.bound] : [r.value]));
  const xScale = logScale(Math.min(...xs), Math.max(...xs), frame.left, frame.width - frame.right);
  const yScale = logScale(Math.min(...ys), Math.max(...ys), frame.height - frame.bottom, frame.top);
  const body: string[] = [
    axes({ frame, xScale, yScale, title, xLabel: key, yLabel: "value (log)" }),
  ];
  let idx = 0;
  for (const [groupKey, group] of [...series.entries()].sort()) {
    const color = SERIES_COLORS[idx % SERIES_COLORS.length];
    idx += 1;
    const pts = group
      .map((r) => [paramNumber(r.param, key) as number, r.value, r.bound] as const)
      .sort((a, b) => a[0] - b[0]);
    body.push(polyline(pts.map(([x, v]) => [xScale.map(x), yScale.map(v)]), color));
    for (const [x, v] of pts) body.push(circle(xScale.map(x), yScale.map(v), 3, color));
    const boundPts = pts.filter((p) => p[2] !== null && (p[2] as number) > 0);
    if (boundPts.length > 0) {
      body.push(
        polyline(boundPts.map(([x, , b]) => [xScale.map(x), yScale.map(b as number)]), color, "6 4"),
      );
    }
    body.push(text(frame.width - frame.right - 4, frame.top + 14 + 14 * idx, groupKey || "all", "end", 11));
  }
  body.push(text(frame.width - frame.right - 4, frame.top + 14, "solid: measured, dashed: bound", "end", 11));
  return document(frame, body);
}

/** Histogram of the slack column (bound minus measured value). */
export function renderSlackHist(rows: ResultRow[], spec: FigureSpec): string {
  const frame = DEFAULT_FRAME;
  const title = spec.title ?? "slack distribution";
  const slacks = applyFilters(rows, spec)
    .map((r) => r.slack)
    .filter((s): s is number => s !== null);
  if (slacks.length === 0) return emptyFigure(frame, title, "slack", "count");
  const lo = Math.min(...slacks);
  const hi = Math.max(...slacks);
  const nBins = Math.min(24, Math.max(6, Math.ceil(Math.sqrt(slacks.length))));
  const width = (hi - lo) / nBins || 1;
  const counts = new Array<number>(nBins).fill(0);
  for (const s of slacks) {
    counts[Math.min(nBins - 1, Math.floor((s - lo) / width))] += 1;
  }
  const xScale = linearScale(lo, hi, frame.left, frame.width - frame.right);
  const yScale = linearScale(0, Math.max(...counts), frame.height - frame.bottom, frame.top);
  const body = [axes({ frame, xScale, yScale, title, xLabel: "slack", yLabel: "count" })];
  const base = frame.height - frame.bottom;
  counts.forEach((count, i) => {
    const x0 = xScale.map(lo + i * width);
    const x1 = xScale.map(lo + (i + 1) * width);
    body.push(rect(x0 + 0.5, yScale.map(count), x1 - x0 - 1, base - yScale.map(count), "#1f77b4"));
  });
  return document(frame, body);
}

/** Root values against a numeric sweep parameter (regime sets and the like). */
export function renderRegimeValues(rows: ResultRow[], spec: FigureSpec): string {
  const frame = DEFAULT_FRAME;
  const key = spec.paramKey ?? "umax";
  const title = spec.title ?? `value vs ${key}`;
  const picked = applyFilters(rows, spec, "value_root")
    .map((r) => [paramNumber(r.param, key), r.value] as const)
    .filter((p): p is readonly [number, number] => p[0] !== null)
    .sort((a, b) => a[0] - b[0]);
  if (picked.length === 0) return emptyFigure(frame, title, key, "value");
  const xScale = linearScale(
    Math.min(...picked.map((p) => p[0])),
    Math.max(...picked.map((p) => p[0])),
    frame.left,
    frame.width - frame.right,
  );
  const lo = Math.min(...picked.map((p) => p[1]));
  const hi = Math.max(...picked.map((p) => p[1]));
  const pad = 0.08 * (hi - lo || 1);
  const yScale = linearScale(lo - pad, hi + pad, frame.height - frame.bottom, frame.top);
  const body = [axes({ frame, xScale, yScale, title, xLabel: key, yLabel: "root value" })];
  body.push(polyline(picked.map(([x, v]) => [xScale.map(x), yScale.map(v)]), "#d62728"));
  for (const [x, v] of picked) body.push(circle(xScale.map(x), yScale.map(v), 3.5, "#d62728"));
  return document(frame, body);
}

export function renderFigure(rows: ResultRow[], spec: FigureSpec): string {
  switch (spec.kind) {
    case "convergence":
      return renderConvergence(rows, spec);
    case "slack-hist":
      return renderSlackHist(rows, spec);
    case "regime-values":
      return renderRegimeValues(rows, spec);
    default:
      throw new ReportError(`unknown figure kind ${JSON.stringify(spec.kind)}`);
  }
}
