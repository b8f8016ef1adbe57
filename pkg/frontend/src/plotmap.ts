/** Contour map of one raster field at caption-specified levels. */

import { parseCsv, rasterFromTable } from "./csv";
import { contourLevel, levelRange, Polyline } from "./contour";
import { project, ProjectionName } from "./project";
import { polylineElement, render, SvgElement, textElement } from "./svg";

export interface MapSpec {
  input: string;
  output: string;
  min: number;
  max: number;
  step: number;
  field: string;
  projection: ProjectionName;
}

export interface MapResult {
  svg: string;
  levelsDrawn: number;
  levelsRequested: number;
}

export function buildMap(spec: MapSpec): MapResult {
  if (spec.step <= 0) throw new Error("contour step must be positive");
  if (spec.min >= spec.max) throw new Error("contour min must be below max");
  const table = parseCsv(spec.input);
  const raster = rasterFromTable(table, spec.field);
  const levels = levelRange(spec.min, spec.max, spec.step);
  const perLevel: Array<{ level: number; lines: Polyline[] }> = [];
  for (const level of levels) {
    perLevel.push({ level, lines: contourLevel(raster, level) });
  }
  const drawn = perLevel.filter((p) => p.lines.length > 0);

  const elements: SvgElement[] = [];
  let width = 720;
  let height = 360;
  for (const { level, lines } of drawn) {
    const proj = project(lines, spec.projection);
    width = proj.width;
    height = proj.height + 40;
    const negative = level < 0;
    for (const line of proj.lines) {
      elements.push(polylineElement(
        line, "black", negative ? "4 3" : "", `level-${level}`));
    }
  }
  if (spec.projection !== "latlon") {
    elements.push({
      tag: "circle",
      attrs: { cx: width / 2, cy: (height - 40) / 2, r: (width - 20) / 2,
               fill: "none", stroke: "gray" },
    });
  }
  elements.push(textElement(
    10, height - 12,
    `${spec.field}: ${drawn.length} of ${levels.length} levels ` +
    `[${spec.min} .. ${spec.max}] step ${spec.step}`));
  const svg = render(width, height, elements);
  return { svg, levelsDrawn: drawn.length, levelsRequested: levels.length };
}
