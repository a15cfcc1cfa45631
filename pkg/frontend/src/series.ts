/**
 * Curve extraction: group records into convergence curves and reduce
 * seed batches to the per-work-size median error (medians, not means:
 * absolute MC errors are heavy-tailed).
 */
import { basename } from "path";
import { ParsedCsv, StudyRecord } from "./csv";

export interface Curve {
  label: string;
  points: { n: number; err: number }[]; // ascending in n, err > 0
}

function median(values: number[]): number {
  const s = [...values].sort((a, b) => a - b);
  const mid = Math.floor(s.length / 2);
  return s.length % 2 === 1 ? s[mid] : 0.5 * (s[mid - 1] + s[mid]);
}

function errorOf(r: StudyRecord): number | null {
  return r.absError !== null ? r.absError : r.relError;
}

/**
 * Grouping keys: "mode" groups by the CSV mode column; any other key
 * (the schema carries no outer/inner columns) contributes the file stem
 * once, so rule combinations recorded in separate files stay separate
 * curves.
 */
export function buildCurves(
  inputs: ParsedCsv[],
  groupKeys: string[],
): { curves: Curve[]; emptyGroups: string[] } {
  const useMode = groupKeys.includes("mode") || groupKeys.length === 0;
  const useFile =
    inputs.length > 1 || groupKeys.some((k) => k !== "mode");
  const buckets = new Map<string, Map<number, number[]>>();
  for (const input of inputs) {
    const stem = basename(input.path).replace(/\.csv$/i, "");
    for (const rec of input.records) {
      const parts: string[] = [];
      if (useFile) parts.push(stem);
      if (useMode) parts.push(rec.mode);
      const label = parts.join("/") || "study";
      let byN = buckets.get(label);
      if (!byN) {
        byN = new Map();
        buckets.set(label, byN);
      }
      const err = errorOf(rec);
      if (err === null) continue; // group exists, row not plottable
      const arr = byN.get(rec.n);
      if (arr) arr.push(err);
      else byN.set(rec.n, [err]);
    }
  }
  const curves: Curve[] = [];
  const emptyGroups: string[] = [];
  for (const [label, byN] of [...buckets.entries()].sort()) {
    const points = [...byN.entries()]
      .map(([n, errs]) => ({ n, err: median(errs) }))
      .filter((p) => p.err > 0 && Number.isFinite(p.err))
      .sort((a, b) => a.n - b.n);
    if (points.length === 0) {
      emptyGroups.push(label);
      continue;
    }
    curves.push({ label, points });
  }
  return { curves, emptyGroups };
}
