import { execFileSync } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { beforeAll, describe, expect, it } from "vitest";

import { renderChart, toBars } from "../src/chart";
import { CHART_KINDS, parseResults, readResults } from "../src/csv";
import { renderSpecs } from "../src/cli";

const PRESETS = ["hbm-full", "hbm-zero", "xbar-vs-mesh", "latency-sweep"];
let workdir: string;

beforeAll(() => {
  workdir = fs.mkdtempSync(path.join(os.tmpdir(), "charts-"));
  for (const preset of PRESETS) {
    execFileSync(
      "python3",
      ["-m", "nocsim.cli", "--scenario", preset, "--out",
       path.join(workdir, "csv"), "--csv"],
      { cwd: path.join(__dirname, "..", "..") },
    );
  }
}, 120_000);

describe("bar collapsing", () => {
  it("turns min/mean/max triplets into one bar with whiskers", () => {
    const rows = parseResults(
      [
        "kind,entity,metric,value",
        "latency,hops2,count,8",
        "latency,hops2,min_cycles,12",
        "latency,hops2,max_cycles,12",
        "latency,hops2,mean_cycles,12",
      ].join("\n"),
    );
    const bars = toBars(rows, "latency");
    const whiskered = bars.find((b) => b.label === "hops2 cycles");
    expect(whiskered).toMatchObject({ value: 12, lo: 12, hi: 12 });
  });

  it("adds whiskers over repeated samples", () => {
    const rows = parseResults(
      [
        "kind,entity,metric,value",
        "utilization,hbm0,channel_util,0.2",
        "utilization,hbm0,channel_util,0.3",
      ].join("\n"),
    );
    const bars = toBars(rows, "utilization");
    expect(bars).toHaveLength(1);
    expect(bars[0].value).toBeCloseTo(0.25);
    expect(bars[0]).toMatchObject({ lo: 0.2, hi: 0.3 });
  });
});

describe("render over simulator presets", () => {
  it("emits all four chart kinds without error", () => {
    for (const kind of CHART_KINDS) {
      const inputs = PRESETS.map((p) => path.join(workdir, "csv", `${p}.csv`));
      const rows = inputs.flatMap((f) => readResults(f));
      const svg = renderChart(rows, kind, { title: kind });
      expect(svg.startsWith("<svg ")).toBe(true);
      expect(svg).toContain("<rect");
    }
  });

  it("re-rendering is byte-stable", () => {
    const specs = CHART_KINDS.map((kind) => ({
      inputs: PRESETS.map((p) => path.join(workdir, "csv", `${p}.csv`)),
      kind,
      output: path.join(workdir, `${kind}.svg`),
    }));
    renderSpecs(specs);
    const first = specs.map((s) => fs.readFileSync(s.output));
    renderSpecs(specs);
    specs.forEach((s, i) => {
      expect(fs.readFileSync(s.output).equals(first[i])).toBe(true);
    });
  });

  it("rejects a CSV with a missing column", () => {
    const bad = path.join(workdir, "bad.csv");
    fs.writeFileSync(bad, "kind,entity,value\nlatency,a,1\n");
    expect(() =>
      renderSpecs([{ inputs: [bad], kind: "latency", output: "x.svg" }]),
    ).toThrowError(/missing column "metric"/);
  });

  it("rejects an empty CSV", () => {
    const empty = path.join(workdir, "empty.csv");
    fs.writeFileSync(empty, "kind,entity,metric,value\n");
    expect(() =>
      renderSpecs([{ inputs: [empty], kind: "latency", output: "x.svg" }]),
    ).toThrowError(/empty input/);
  });
});
