/** Map projections for contour polylines. */

import { Polyline } from "./contour";

export type ProjectionName = "latlon" | "north-polar" | "south-polar";

export interface Projected {
  lines: Polyline[];
  width: number;
  height: number;
}

/** Equirectangular: x = lon, y = -lat, drawn into a 720x360 box. */
function projectLatLon(lines: Polyline[]): Projected {
  const sx = 720 / (2 * Math.PI);
  const sy = 360 / Math.PI;
  const out = lines.map((line) =>
    line.map(([lon, lat]): [number, number] =>
      [(lon + Math.PI) * sx, (Math.PI / 2 - lat) * sy]));
  return { lines: out, width: 720, height: 360 };
}

/**
 * Orthographic view from above a pole, clipped to that hemisphere.
 * North view: x = cos(lat) sin(lon), y = -cos(lat) cos(lon).
 */
function projectPolar(lines: Polyline[], north: boolean): Projected {
  const Rpx = 250;
  const cx = Rpx + 10;
  const out: Polyline[] = [];
  for (const line of lines) {
    let current: Polyline = [];
    for (const [lon, lat] of line) {
      if ((north && lat < 0) || (!north && lat > 0)) {
        if (current.length > 1) out.push(current);
        current = [];
        continue;
      }
      const r = Math.cos(lat);
      const sgn = north ? 1 : -1;
      current.push([cx + Rpx * r * Math.sin(lon),
                    cx - sgn * Rpx * r * Math.cos(lon)]);
    }
    if (current.length > 1) out.push(current);
  }
  return { lines: out, width: 2 * cx, height: 2 * cx };
}

export function project(lines: Polyline[], name: ProjectionName): Projected {
  switch (name) {
    case "latlon":
      return projectLatLon(lines);
    case "north-polar":
      return projectPolar(lines, true);
    case "south-polar":
      return projectPolar(lines, false);
  }
}
