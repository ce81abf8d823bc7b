/**
 * Headless SVG plotting primitives: scales, axes, marks as plain strings.
 * No DOM, no canvas; the output is a standalone .svg document.
 */

export interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const DEFAULT_FRAME: Frame = { width: 640, height: 420, left: 70, right: 20, top: 36, bottom: 48 };

export interface Scale {
  map(x: number): number;
  ticks: number[];
}

export function linearScale(lo: number, hi: number, r0: number, r1: number, tickCount = 6): Scale {
  if (hi === lo) {
    hi = lo + 1;
    lo = lo - 1;
  }
  const span = hi - lo;
  const rawStep = span / Math.max(tickCount - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= tickCount) ?? mag * 10;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return { map: (x) => r0 + ((x - lo) / (hi - lo)) * (r1 - r0), ticks };
}

export function logScale(lo: number, hi: number, r0: number, r1: number): Scale {
  if (!(lo > 0) || !(hi > 0)) {
    throw new Error("log scale needs positive bounds");
  }
  if (hi === lo) {
    hi = lo * 10;
    lo = lo / 10;
  }
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const ticks: number[] = [];
  for (let k = Math.floor(llo); k <= Math.ceil(lhi); k += 1) {
    for (const m of [1, 2, 5]) {
      const v = m * Math.pow(10, k);
      if (v >= lo * 0.999 && v <= hi * 1.001) ticks.push(v);
    }
  }
  return { map: (x) => r0 + ((Math.log10(x) - llo) / (lhi - llo)) * (r1 - r0), ticks };
}

const fmt = (x: number): string => {
  if (x === 0) return "0";
  const a = Math.abs(x);
  if (a >= 1e4 || a < 1e-3) return x.toExponential(0);
  return String(Number(x.toPrecision(4)));
};

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function polyline(points: Array<[number, number]>, stroke: string, dash = ""): string {
  const pts = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<polyline fill="none" stroke="${stroke}" stroke-width="1.8"${dashAttr} points="${pts}"/>`;
}

export function circle(x: number, y: number, r: number, fill: string): string {
  return `<circle cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="${r}" fill="${fill}"/>`;
}

export function rect(x: number, y: number, w: number, h: number, fill: string): string {
  return `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${Math.max(w, 0).toFixed(2)}" height="${Math.max(h, 0).toFixed(2)}" fill="${fill}"/>`;
}

export function text(x: number, y: number, s: string, anchor = "middle", size = 12): string {
  return `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" text-anchor="${anchor}" font-size="${size}" font-family="sans-serif">${esc(s)}</text>`;
}

export interface AxesSpec {
  frame: Frame;
  xScale: Scale;
  yScale: Scale;
  title: string;
  xLabel: string;
  yLabel: string;
}

export function axes({ frame, xScale, yScale, title, xLabel, yLabel }: AxesSpec): string {
  const parts: string[] = [];
  const x0 = frame.left;
  const x1 = frame.width - frame.right;
  const y0 = frame.height - frame.bottom;
  const y1 = frame.top;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  for (const t of xScale.ticks) {
    const px = xScale.map(t);
    parts.push(`<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y0 + 5}" stroke="black"/>`);
    parts.push(text(px, y0 + 18, fmt(t)));
  }
  for (const t of yScale.ticks) {
    const py = yScale.map(t);
    parts.push(`<line x1="${x0 - 5}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="black"/>`);
    parts.push(text(x0 - 8, py + 4, fmt(t), "end", 11));
    parts.push(`<line x1="${x0}" y1="${py.toFixed(2)}" x2="${x1}" y2="${py.toFixed(2)}" stroke="#dddddd"/>`);
  }
  parts.push(text((x0 + x1) / 2, frame.top - 14, title, "middle", 15));
  parts.push(text((x0 + x1) / 2, frame.height - 10, xLabel));
  parts.push(`<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`);
  return parts.join("\n");
}

export function document(frame: Frame, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}">`,
    `<rect width="${frame.width}" height="${frame.height}" fill="white"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}
