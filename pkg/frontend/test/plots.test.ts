import assert from "node:assert";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { test } from "node:test";

import { parseCsv, rasterFromTable, column } from "../src/csv";
import { contourLevel, levelRange } from "../src/contour";
import { buildMap } from "../src/plotmap";
import { buildSeries } from "../src/plotseries";
import { main } from "../src/cli";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "cubedswe-plots-"));

/** Synthetic lat/lon raster shaped like the steady zonal height field. */
function writeZonalRaster(file: string, nLat = 36): void {
  const lines = ["# meta: n_lat=" + nLat, "xi,eta,h,u_s,v_s,vorticity"];
  const d = Math.PI / nLat;
  for (let i = 0; i < 2 * nLat; i++) {
    const xi = -Math.PI + (i + 0.5) * d;
    for (let j = 0; j < nLat; j++) {
      const eta = -Math.PI / 2 + (j + 0.5) * d;
      const h = 2998 - 1905 * Math.sin(eta) ** 2;
      const us = 38.6 * Math.cos(eta);
      lines.push([xi, eta, h, us, 0, 0].join(","));
    }
  }
  fs.writeFileSync(file, lines.join("\n") + "\n");
}

test("csv parser reads meta, header and rows", () => {
  const file = path.join(tmp, "t.csv");
  fs.writeFileSync(file, "# meta: case=w2 N=8\na,b\n1,2\n3,4\n");
  const table = parseCsv(file);
  assert.deepStrictEqual(table.columns, ["a", "b"]);
  assert.strictEqual(table.meta.case, "w2");
  assert.deepStrictEqual(column(table, "b"), [2, 4]);
  assert.throws(() => column(table, "zzz"), /missing column 'zzz'/);
});

test("csv parser reports bad lines with their line number", () => {
  const file = path.join(tmp, "bad.csv");
  fs.writeFileSync(file, "a,b\n1,2\n1,oops\n");
  assert.throws(() => parseCsv(file), /line 3/);
});

test("raster reshaping and empty-raster error", () => {
  const file = path.join(tmp, "r.csv");
  writeZonalRaster(file, 12);
  const raster = rasterFromTable(parseCsv(file), "h");
  assert.strictEqual(raster.lon.length, 24);
  assert.strictEqual(raster.lat.length, 12);
  const empty = path.join(tmp, "empty.csv");
  fs.writeFileSync(empty, "xi,eta,h,u_s,v_s,vorticity\n");
  assert.throws(() => rasterFromTable(parseCsv(empty), "h"), /empty raster/);
});

test("marching squares finds a circle-like contour", () => {
  const lon = [-2, -1, 0, 1, 2];
  const lat = [-1, -0.5, 0, 0.5, 1];
  const values = lon.map((x) => lat.map((y) => x * x + y * y));
  const segs = contourLevel({ lon, lat, values }, 1.0);
  assert.ok(segs.length >= 4);
  for (const seg of segs) {
    for (const [x, y] of seg) {
      assert.ok(Math.abs(x * x + y * y - 1) < 0.6);
    }
  }
});

test("level range and validation", () => {
  assert.deepStrictEqual(levelRange(0, 1, 0.5), [0, 0.5, 1]);
  assert.throws(() => levelRange(1, 0, 0.5));
  assert.throws(() => levelRange(0, 1, -1));
});

test("plot-map draws the full 1150..2950 step 200 level set", () => {
  // the acceptance criterion: ten levels, all present in the zonal field
  const input = path.join(tmp, "zonal.csv");
  writeZonalRaster(input);
  const out = path.join(tmp, "map.svg");
  const result = buildMap({
    input, output: out, min: 1150, max: 2950, step: 200,
    field: "h", projection: "latlon",
  });
  assert.strictEqual(result.levelsRequested, 10);
  assert.strictEqual(result.levelsDrawn, 10);
  assert.match(result.svg, /<svg /);
  for (let level = 1150; level <= 2950; level += 200) {
    assert.match(result.svg, new RegExp(`level-${level}`));
  }
});

test("plot-map polar projection clips the far hemisphere", () => {
  const input = path.join(tmp, "zonal2.csv");
  writeZonalRaster(input);
  const north = buildMap({
    input, output: "", min: 1150, max: 2950, step: 200,
    field: "h", projection: "north-polar",
  });
  assert.ok(north.levelsDrawn > 0);
  assert.match(north.svg, /<circle /);
});

test("plot-map on a constant field draws zero contours but a legend", () => {
  const input = path.join(tmp, "const.csv");
  const lines = ["xi,eta,h,u_s,v_s,vorticity"];
  for (let i = 0; i < 8; i++) {
    for (let j = 0; j < 4; j++) {
      lines.push([i, j, 5.0, 0, 0, 0].join(","));
    }
  }
  fs.writeFileSync(input, lines.join("\n") + "\n");
  const result = buildMap({
    input, output: "", min: 1, max: 3, step: 1,
    field: "h", projection: "latlon",
  });
  assert.strictEqual(result.levelsDrawn, 0);
  assert.match(result.svg, /0 of 3 levels/);
});

test("plot-series renders a three-norm log plot", () => {
  const input = path.join(tmp, "norms.csv");
  const rows = ["t_days,l1_h,l2_h,linf_h,mass_drift"];
  for (let k = 0; k <= 12; k++) {
    const t = k * 0.25;
    rows.push([t, 1e-4 * (1 + t), 2e-4 * (1 + t), 1e-3 * (1 + t), 0].join(","));
  }
  fs.writeFileSync(input, rows.join("\n") + "\n");
  const result = buildSeries({
    input, output: "", columns: ["l1_h", "l2_h", "linf_h"],
    log10: true, timeColumn: "t_days",
  });
  assert.strictEqual(result.pointsPerSeries, 13);
  assert.match(result.svg, /series-l1_h/);
  assert.match(result.svg, /series-l2_h/);
  assert.match(result.svg, /series-linf_h/);
  // dashed and dotted styles present (solid has no dasharray)
  assert.match(result.svg, /stroke-dasharray="6 4"/);
  assert.match(result.svg, /stroke-dasharray="1.5 3"/);
});

test("plot-series clamps exact zeros on the log scale", () => {
  const input = path.join(tmp, "mass.csv");
  fs.writeFileSync(input,
    "t_days,mass_drift\n0,0\n1,1e-15\n2,0\n3,2e-15\n");
  const result = buildSeries({
    input, output: "", columns: ["mass_drift"], log10: true,
    timeColumn: "t_days",
  });
  assert.doesNotMatch(result.svg, /NaN|Infinity/);
});

test("plot-series single row gets a marker", () => {
  const input = path.join(tmp, "one.csv");
  fs.writeFileSync(input, "t_days,l2_h\n0,1e-3\n");
  const result = buildSeries({
    input, output: "", columns: ["l2_h"], log10: true, timeColumn: "t_days",
  });
  assert.match(result.svg, /<circle /);
});

test("plot-series names a missing column", () => {
  const input = path.join(tmp, "nocol.csv");
  fs.writeFileSync(input, "t_days,l2_h\n0,1e-3\n");
  assert.throws(() => buildSeries({
    input, output: "", columns: ["l9_h"], log10: false,
    timeColumn: "t_days",
  }), /missing column 'l9_h'/);
});

test("cli end to end writes SVG files", () => {
  const input = path.join(tmp, "cli.csv");
  writeZonalRaster(input);
  const outMap = path.join(tmp, "cli-map.svg");
  let code = main(["node", "cli.js", "plot-map", "--input", input,
                   "--out", outMap, "--min", "1150", "--max", "2950",
                   "--step", "200"]);
  assert.strictEqual(code, 0);
  assert.ok(fs.existsSync(outMap));
  const norms = path.join(tmp, "cli-norms.csv");
  fs.writeFileSync(norms, "t_days,l1_h,l2_h,linf_h\n0,1e-4,2e-4,1e-3\n" +
    "1,2e-4,3e-4,2e-3\n");
  const outSeries = path.join(tmp, "cli-series.svg");
  code = main(["node", "cli.js", "plot-series", "--input", norms,
               "--out", outSeries]);
  assert.strictEqual(code, 0);
  assert.ok(fs.existsSync(outSeries));
  // bad usage
  code = main(["node", "cli.js", "plot-map", "--input", input]);
  assert.strictEqual(code, 1);
});
