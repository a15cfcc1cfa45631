/**
 * Figure layout: a log-log plot scene made of primitive lines, labeled
 * curves and guide lines.  Pure data; svg.ts and png.ts render it.
 */
import { Curve } from "./series";

export interface Polyline {
  kind: "curve" | "guide";
  label: string;
  color: string;
  points: { x: number; y: number }[]; // pixel coordinates
}

export interface TextItem {
  x: number;
  y: number;
  text: string;
  size: number;
  color: string;
  anchor: "start" | "middle" | "end";
}

export interface Segment {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  color: string;
}

export interface Scene {
  width: number;
  height: number;
  xScale: "log";
  yScale: "log";
  frame: Segment[];
  ticks: Segment[];
  polylines: Polyline[];
  texts: TextItem[];
}

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

const GUIDE_COLOR = "#999999";

export function guideLabel(exponent: number): string {
  for (let q = 1; q <= 8; q++) {
    const p = exponent * q;
    if (Math.abs(p - Math.round(p)) < 1e-9) {
      const pr = Math.round(p);
      return q === 1 ? `N^(${pr})` : `N^(${pr}/${q})`;
    }
  }
  return `N^(${exponent})`;
}

function niceDecades(lo: number, hi: number): number[] {
  const start = Math.ceil(lo - 1e-9);
  const out: number[] = [];
  for (let d = start; d <= hi + 1e-9; d++) out.push(d);
  return out;
}

function fmtPow10(d: number): string {
  return `1e${d}`;
}

export function buildScene(
  curves: Curve[],
  guides: number[],
  width = 720,
  height = 520,
): Scene {
  const margin = { left: 70, right: 160, top: 28, bottom: 52 };
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;

  let xLo = Infinity;
  let xHi = -Infinity;
  let yLo = Infinity;
  let yHi = -Infinity;
  for (const c of curves) {
    for (const p of c.points) {
      xLo = Math.min(xLo, Math.log10(p.n));
      xHi = Math.max(xHi, Math.log10(p.n));
      yLo = Math.min(yLo, Math.log10(p.err));
      yHi = Math.max(yHi, Math.log10(p.err));
    }
  }
  if (!Number.isFinite(xLo)) {
    xLo = 0;
    xHi = 1;
    yLo = -1;
    yHi = 0;
  }
  if (xHi - xLo < 1e-9) xHi = xLo + 1;
  if (yHi - yLo < 1e-9) yHi = yLo + 1;
  const padY = 0.05 * (yHi - yLo);
  yLo -= padY;
  yHi += padY;

  const px = (lx: number) =>
    margin.left + ((lx - xLo) / (xHi - xLo)) * plotW;
  const py = (ly: number) =>
    margin.top + ((yHi - ly) / (yHi - yLo)) * plotH;

  const frame: Segment[] = [
    { x1: margin.left, y1: margin.top, x2: margin.left, y2: margin.top + plotH, color: "#000" },
    { x1: margin.left, y1: margin.top + plotH, x2: margin.left + plotW, y2: margin.top + plotH, color: "#000" },
  ];
  const ticks: Segment[] = [];
  const texts: TextItem[] = [];

  for (const d of niceDecades(xLo, xHi)) {
    const x = px(d);
    ticks.push({ x1: x, y1: margin.top + plotH, x2: x, y2: margin.top + plotH + 6, color: "#000" });
    texts.push({ x, y: margin.top + plotH + 20, text: fmtPow10(d), size: 12, color: "#000", anchor: "middle" });
  }
  for (const d of niceDecades(yLo, yHi)) {
    const y = py(d);
    ticks.push({ x1: margin.left - 6, y1: y, x2: margin.left, y2: y, color: "#000" });
    texts.push({ x: margin.left - 10, y: y + 4, text: fmtPow10(d), size: 12, color: "#000", anchor: "end" });
  }
  texts.push({
    x: margin.left + plotW / 2,
    y: height - 12,
    text: "work N (inner evaluations)",
    size: 13,
    color: "#000",
    anchor: "middle",
  });
  texts.push({
    x: 16,
    y: margin.top - 10,
    text: "error",
    size: 13,
    color: "#000",
    anchor: "start",
  });

  const polylines: Polyline[] = [];
  curves.forEach((c, i) => {
    const color = PALETTE[i % PALETTE.length];
    polylines.push({
      kind: "curve",
      label: c.label,
      color,
      points: c.points.map((p) => ({ x: px(Math.log10(p.n)), y: py(Math.log10(p.err)) })),
    });
    texts.push({
      x: margin.left + plotW + 12,
      y: margin.top + 16 + i * 18,
      text: c.label,
      size: 12,
      color,
      anchor: "start",
    });
  });

  // guide lines anchored at the top-right of the data range
  guides.forEach((g, i) => {
    const lx1 = xLo + 0.55 * (xHi - xLo);
    const lx2 = xHi;
    const anchorY = yHi - padY - 0.08 * (yHi - yLo) * (i + 1);
    const ly1 = anchorY;
    const ly2 = anchorY + g * (lx2 - lx1);
    polylines.push({
      kind: "guide",
      label: guideLabel(g),
      color: GUIDE_COLOR,
      points: [
        { x: px(lx1), y: py(ly1) },
        { x: px(lx2), y: py(ly2) },
      ],
    });
    texts.push({
      x: px(lx1) - 6,
      y: py(ly1) + 4,
      text: guideLabel(g),
      size: 11,
      color: GUIDE_COLOR,
      anchor: "end",
    });
  });

  return { width, height, xScale: "log", yScale: "log", frame, ticks, polylines, texts };
}
