#!/usr/bin/env node
/**
 * render: turn result CSVs into SVG bar charts.
 *
 * Usage:
 *   render --spec charts.json
 *   render results/a.csv results/b.csv --kind latency --output latency.svg
 *
 * A spec file is a JSON array of chart specs:
 *   [{ "inputs": ["a.csv"], "kind": "utilization",
 *      "output": "util.svg", "labels": { "title": "..." } }]
 */

import * as fs from "fs";
import * as path from "path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { Labels, renderChart } from "./chart";
import { CHART_KINDS, ChartKind, ResultRow, readResults } from "./csv";

export interface ChartSpec {
  inputs: string[];
  kind: ChartKind;
  output: string;
  labels?: Labels;
}

function loadSpec(file: string): ChartSpec[] {
  const doc = JSON.parse(fs.readFileSync(file, "utf8"));
  const specs: ChartSpec[] = Array.isArray(doc) ? doc : [doc];
  for (const spec of specs) {
    if (!spec.inputs || spec.inputs.length === 0) {
      throw new Error(`${file}: chart spec has no inputs`);
    }
    if (!CHART_KINDS.includes(spec.kind)) {
      throw new Error(`${file}: unknown chart kind "${spec.kind}"`);
    }
    if (!spec.output) {
      throw new Error(`${file}: chart spec has no output path`);
    }
  }
  return specs;
}

export function renderSpecs(specs: ChartSpec[]): string[] {
  const written: string[] = [];
  for (const spec of specs) {
    const rows: ResultRow[] = [];
    for (const input of spec.inputs) {
      rows.push(...readResults(input));
    }
    const svg = renderChart(rows, spec.kind, spec.labels ?? {});
    fs.mkdirSync(path.dirname(path.resolve(spec.output)), { recursive: true });
    fs.writeFileSync(spec.output, svg);
    written.push(spec.output);
  }
  return written;
}

export function main(argv: string[]): number {
  const args = yargs(argv)
    .usage("render [csv..] [options]")
    .option("spec", { type: "string", describe: "JSON chart-spec file" })
    .option("kind", {
      type: "string",
      choices: CHART_KINDS as unknown as string[],
      describe: "chart kind for positional CSVs",
    })
    .option("output", {
      type: "string",
      default: "chart.svg",
      describe: "output image path for positional CSVs",
    })
    .help()
    .parseSync();

  try {
    let specs: ChartSpec[];
    if (args.spec) {
      specs = loadSpec(args.spec);
    } else {
      const inputs = (args._ as string[]).map(String);
      if (inputs.length === 0 || !args.kind) {
        console.error("render: need --spec FILE, or CSV paths with --kind");
        return 2;
      }
      specs = [
        { inputs, kind: args.kind as ChartKind, output: args.output },
      ];
    }
    for (const file of renderSpecs(specs)) {
      console.log(`wrote ${file}`);
    }
    return 0;
  } catch (err) {
    console.error(`render: ${(err as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(hideBin(process.argv)));
}
