/** Marching-squares contour extraction on a regular raster. */

import { Raster } from "./csv";

export type Polyline = Array<[number, number]>;

function interp(
  a: number, b: number, va: number, vb: number, level: number): number {
  const t = (level - va) / (vb - va);
  return a + t * (b - a);
}

/**
 * Contour segments of one level as short two-point polylines in
 * (lon, lat) coordinates.  Saddle cells use the cell-mean disambiguation.
 */
export function contourLevel(raster: Raster, level: number): Polyline[] {
  const { lon, lat, values } = raster;
  const out: Polyline[] = [];
  for (let i = 0; i + 1 < lon.length; i++) {
    for (let j = 0; j + 1 < lat.length; j++) {
      const v00 = values[i][j];
      const v10 = values[i + 1][j];
      const v11 = values[i + 1][j + 1];
      const v01 = values[i][j + 1];
      let mask = 0;
      if (v00 > level) mask |= 1;
      if (v10 > level) mask |= 2;
      if (v11 > level) mask |= 4;
      if (v01 > level) mask |= 8;
      if (mask === 0 || mask === 15) continue;
      const x0 = lon[i], x1 = lon[i + 1];
      const y0 = lat[j], y1 = lat[j + 1];
      const bottom: [number, number] =
        [interp(x0, x1, v00, v10, level), y0];
      const top: [number, number] =
        [interp(x0, x1, v01, v11, level), y1];
      const left: [number, number] =
        [x0, interp(y0, y1, v00, v01, level)];
      const right: [number, number] =
        [x1, interp(y0, y1, v10, v11, level)];
      switch (mask) {
        case 1: case 14: out.push([left, bottom]); break;
        case 2: case 13: out.push([bottom, right]); break;
        case 3: case 12: out.push([left, right]); break;
        case 4: case 11: out.push([top, right]); break;
        case 6: case 9: out.push([bottom, top]); break;
        case 7: case 8: out.push([left, top]); break;
        case 5: case 10: {
          const mean = 0.25 * (v00 + v10 + v11 + v01);
          const same = (mean > level) === (mask === 5);
          if (same) {
            out.push([left, bottom]);
            out.push([top, right]);
          } else {
            out.push([left, top]);
            out.push([bottom, right]);
          }
          break;
        }
      }
    }
  }
  return out;
}

export function levelRange(min: number, max: number, step: number): number[] {
  if (step <= 0) throw new Error("contour step must be positive");
  if (min >= max) throw new Error("contour min must be below max");
  const levels: number[] = [];
  for (let v = min; v <= max + 1e-9 * step; v += step) levels.push(v);
  return levels;
}
