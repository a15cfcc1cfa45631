/** Orchestration: CSV inputs to a written SVG or PNG figure. */
import { writeFileSync } from "fs";
import { readCsv } from "./csv";
import { buildCurves } from "./series";
import { buildScene, Scene } from "./scene";
import { sceneToPng } from "./png";
import { sceneToSvg } from "./svg";

export interface PlotSpec {
  csvPaths: string[];
  groupKeys: string[];
  outPath: string;
  guides: number[];
}

export interface RenderReport {
  curveCount: number;
  skippedRows: number;
  emptyGroups: string[];
  outPath: string;
}

export function buildSceneFromSpec(spec: PlotSpec): {
  scene: Scene;
  report: Omit<RenderReport, "outPath">;
} {
  const inputs = spec.csvPaths.map((p) => readCsv(p));
  const skippedRows = inputs.reduce((acc, i) => acc + i.skipped, 0);
  const { curves, emptyGroups } = buildCurves(inputs, spec.groupKeys);
  if (curves.length === 0) {
    throw new Error("no plottable curves in the given CSVs");
  }
  const scene = buildScene(curves, spec.guides);
  return {
    scene,
    report: { curveCount: curves.length, skippedRows, emptyGroups },
  };
}

export function render(spec: PlotSpec): RenderReport {
  const { scene, report } = buildSceneFromSpec(spec);
  if (spec.outPath.toLowerCase().endsWith(".png")) {
    writeFileSync(spec.outPath, sceneToPng(scene));
  } else {
    writeFileSync(spec.outPath, sceneToSvg(scene), "utf8");
  }
  for (const g of report.emptyGroups) {
    console.warn(`warning: group ${g} had no plottable rows, skipped`);
  }
  if (report.skippedRows > 0) {
    console.warn(`warning: skipped ${report.skippedRows} malformed row(s)`);
  }
  return { ...report, outPath: spec.outPath };
}
