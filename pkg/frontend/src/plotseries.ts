/** Time-series plot of norms/conservation columns, optionally log10. */

import { column, parseCsv } from "./csv";
import { polylineElement, render, SvgElement, textElement } from "./svg";

export interface SeriesSpec {
  input: string;
  output: string;
  columns: string[];
  log10: boolean;
  timeColumn: string;
}

// solid, dashed, dotted: the conventional l1/l2/linf encoding
const DASHES = ["", "6 4", "1.5 3"];
const LOG_FLOOR = 1e-17;

export interface SeriesResult {
  svg: string;
  pointsPerSeries: number;
}

export function buildSeries(spec: SeriesSpec): SeriesResult {
  const table = parseCsv(spec.input);
  const t = column(table, spec.timeColumn);
  if (t.length === 0) throw new Error("time series file has no rows");
  const series = spec.columns.map((name) => {
    let vals = column(table, name);
    if (spec.log10) {
      vals = vals.map((v) => Math.log10(Math.max(Math.abs(v), LOG_FLOOR)));
    }
    return { name, vals };
  });

  const W = 640;
  const H = 400;
  const m = { l: 60, r: 20, t: 20, b: 60 };
  const tMin = Math.min(...t);
  const tMax = Math.max(...t);
  const vAll = series.flatMap((s) => s.vals);
  let vMin = Math.min(...vAll);
  let vMax = Math.max(...vAll);
  if (vMax === vMin) {
    vMax += 1;
    vMin -= 1;
  }
  const sx = (x: number) =>
    tMax === tMin ? (m.l + W) / 2
      : m.l + ((x - tMin) / (tMax - tMin)) * (W - m.l - m.r);
  const sy = (v: number) =>
    m.t + ((vMax - v) / (vMax - vMin)) * (H - m.t - m.b);

  const elements: SvgElement[] = [
    {
      tag: "rect",
      attrs: { x: m.l, y: m.t, width: W - m.l - m.r, height: H - m.t - m.b,
               fill: "none", stroke: "black" },
    },
  ];
  series.forEach((s, i) => {
    const pts = t.map((x, k): [number, number] => [sx(x), sy(s.vals[k])]);
    if (pts.length === 1) {
      elements.push({
        tag: "circle",
        attrs: { cx: pts[0][0], cy: pts[0][1], r: 3, fill: "black",
                 class: `series-${s.name}` },
      });
    } else {
      elements.push(polylineElement(pts, "black", DASHES[i % DASHES.length],
                                    `series-${s.name}`));
    }
    const lx = m.l + 8;
    const ly = m.t + 16 + 16 * i;
    elements.push(polylineElement(
      [[lx, ly - 4], [lx + 28, ly - 4]], "black",
      DASHES[i % DASHES.length], `legend-${s.name}`));
    elements.push(textElement(lx + 34, ly, s.name));
  });
  elements.push(textElement(W / 2 - 30, H - 16, spec.timeColumn));
  elements.push(textElement(
    6, 14, spec.log10 ? "log10 of magnitude" : "value"));
  const svg = render(W, H, elements);
  return { svg, pointsPerSeries: t.length };
}
