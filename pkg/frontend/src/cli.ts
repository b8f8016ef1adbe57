#!/usr/bin/env node
/** plot-map / plot-series command line entry points. */

import * as fs from "fs";
import * as path from "path";

import { buildMap } from "./plotmap";
import { buildSeries } from "./plotseries";
import { ProjectionName } from "./project";

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (!a.startsWith("--")) throw new Error(`unexpected argument: ${a}`);
    const key = a.slice(2);
    const val = argv[i + 1];
    if (val === undefined) throw new Error(`missing value for --${key}`);
    out.set(key, val);
    i++;
  }
  return out;
}

function need(args: Map<string, string>, key: string): string {
  const v = args.get(key);
  if (v === undefined) throw new Error(`missing required option --${key}`);
  return v;
}

function num(args: Map<string, string>, key: string): number {
  const v = Number(need(args, key));
  if (!Number.isFinite(v)) throw new Error(`--${key} must be a number`);
  return v;
}

export function main(argv: string[]): number {
  const prog = path.basename(argv[1] ?? "plot");
  let command = argv[2];
  if (prog === "plot-map" || prog === "plot-series") {
    command = prog;
    argv = ["", "", command, ...argv.slice(2)];
  }
  try {
    const args = parseArgs(argv.slice(3));
    if (command === "plot-map") {
      const result = buildMap({
        input: need(args, "input"),
        output: need(args, "out"),
        min: num(args, "min"),
        max: num(args, "max"),
        step: num(args, "step"),
        field: args.get("field") ?? "h",
        projection: (args.get("projection") ?? "latlon") as ProjectionName,
      });
      fs.writeFileSync(need(args, "out"), result.svg);
      console.log(`wrote ${need(args, "out")}: ${result.levelsDrawn}/` +
        `${result.levelsRequested} contour levels drawn`);
      return 0;
    }
    if (command === "plot-series") {
      const result = buildSeries({
        input: need(args, "input"),
        output: need(args, "out"),
        columns: (args.get("columns") ?? "l1_h,l2_h,linf_h").split(","),
        log10: (args.get("log10") ?? "true") !== "false",
        timeColumn: args.get("time-column") ?? "t_days",
      });
      fs.writeFileSync(need(args, "out"), result.svg);
      console.log(`wrote ${need(args, "out")} ` +
        `(${result.pointsPerSeries} samples per series)`);
      return 0;
    }
    console.error("usage: plot-map|plot-series --input FILE --out FILE [...]");
    return 1;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv));
}
