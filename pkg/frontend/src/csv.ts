/** Parsers for the solver's CSV output formats. */

import * as fs from "fs";

export interface Table {
  columns: string[];
  rows: number[][];
  meta: Record<string, string>;
}

export class CsvError extends Error {
  constructor(message: string, public line: number) {
    super(`line ${line}: ${message}`);
  }
}

export function parseCsv(path: string): Table {
  const text = fs.readFileSync(path, "utf-8");
  const lines = text.split(/\r?\n/);
  const meta: Record<string, string> = {};
  let i = 0;
  if (lines[0]?.startsWith("# meta:")) {
    for (const tok of lines[0].slice("# meta:".length).trim().split(/\s+/)) {
      const eq = tok.indexOf("=");
      if (eq > 0) meta[tok.slice(0, eq)] = tok.slice(eq + 1);
    }
    i = 1;
  }
  const header = lines[i];
  if (header === undefined || header.trim() === "") {
    throw new CsvError("missing header row", i + 1);
  }
  const columns = header.split(",").map((s) => s.trim());
  const rows: number[][] = [];
  for (let k = i + 1; k < lines.length; k++) {
    const line = lines[k];
    if (line.trim() === "") continue;
    const parts = line.split(",");
    if (parts.length !== columns.length) {
      throw new CsvError(
        `expected ${columns.length} fields, found ${parts.length}`, k + 1);
    }
    const row = parts.map((s, j) => {
      const v = Number(s);
      if (!Number.isFinite(v)) {
        throw new CsvError(`field ${columns[j]} is not a number: ${s}`, k + 1);
      }
      return v;
    });
    rows.push(row);
  }
  return { columns, rows, meta };
}

export function column(table: Table, name: string): number[] {
  const j = table.columns.indexOf(name);
  if (j < 0) {
    throw new Error(
      `missing column '${name}' (have: ${table.columns.join(", ")})`);
  }
  return table.rows.map((r) => r[j]);
}

/** A lat/lon raster: values[iLon][iLat] on uniform cell centers. */
export interface Raster {
  lon: number[];
  lat: number[];
  values: number[][];
}

export function rasterFromTable(table: Table, field: string): Raster {
  if (table.rows.length === 0) throw new Error("empty raster file");
  const lonCol = column(table, "xi");
  const latCol = column(table, "eta");
  const valCol = column(table, field);
  const lat = Array.from(new Set(latCol)).sort((a, b) => a - b);
  const lon = Array.from(new Set(lonCol)).sort((a, b) => a - b);
  if (lat.length * lon.length !== table.rows.length) {
    throw new Error("raster rows do not form a complete lon/lat grid");
  }
  const latIndex = new Map(lat.map((v, i) => [v, i]));
  const lonIndex = new Map(lon.map((v, i) => [v, i]));
  const values: number[][] = lon.map(() => new Array(lat.length).fill(NaN));
  for (let r = 0; r < table.rows.length; r++) {
    const i = lonIndex.get(lonCol[r])!;
    const j = latIndex.get(latCol[r])!;
    values[i][j] = valCol[r];
  }
  return { lon, lat, values };
}
