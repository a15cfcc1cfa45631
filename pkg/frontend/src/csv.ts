/**
 * Reader for the harness CSV schema:
 * mode,L,N,value,rel_error,abs_error,clamp_count,seed,wall_ms
 *
 * Malformed rows are skipped and counted, never repaired.
 */
import { readFileSync } from "fs";

export const CSV_HEADER =
  "mode,L,N,value,rel_error,abs_error,clamp_count,seed,wall_ms";

export interface StudyRecord {
  mode: string;
  level: number;
  n: number;
  value: number;
  relError: number | null;
  absError: number | null;
  clampCount: number;
  seed: number;
  wallMs: number;
}

export interface ParsedCsv {
  path: string;
  records: StudyRecord[];
  skipped: number;
}

function optionalFloat(token: string): number | null {
  if (token === "") return null;
  const v = Number(token);
  return Number.isFinite(v) ? v : NaN;
}

export function parseCsvText(text: string, path = "<memory>"): ParsedCsv {
  const lines = text.split(/\r?\n/);
  if (lines.length === 0 || lines[0].trim() !== CSV_HEADER) {
    throw new Error(`${path}: unexpected CSV header: ${lines[0] ?? ""}`);
  }
  const records: StudyRecord[] = [];
  let skipped = 0;
  for (const raw of lines.slice(1)) {
    const line = raw.trim();
    if (line === "") continue;
    const parts = line.split(",");
    if (parts.length !== 9) {
      skipped += 1;
      continue;
    }
    const level = Number(parts[1]);
    const n = Number(parts[2]);
    const value = Number(parts[3]);
    const rel = optionalFloat(parts[4]);
    const abs = optionalFloat(parts[5]);
    const clamp = Number(parts[6]);
    const seed = Number(parts[7]);
    const wall = Number(parts[8]);
    const bad =
      parts[0] === "" ||
      !Number.isInteger(level) ||
      !Number.isInteger(n) ||
      !Number.isFinite(value) ||
      (rel !== null && !Number.isFinite(rel)) ||
      (abs !== null && !Number.isFinite(abs)) ||
      !Number.isInteger(clamp) ||
      !Number.isInteger(seed) ||
      !Number.isFinite(wall);
    if (bad) {
      skipped += 1;
      continue;
    }
    records.push({
      mode: parts[0],
      level,
      n,
      value,
      relError: rel,
      absError: abs,
      clampCount: clamp,
      seed,
      wallMs: wall,
    });
  }
  return { path, records, skipped };
}

export function readCsv(path: string): ParsedCsv {
  return parseCsvText(readFileSync(path, "utf8"), path);
}
