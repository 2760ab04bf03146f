import { describe, expect, it } from "vitest";

import { EmptyInputError, SchemaError, parseResults } from "../src/csv";

const GOOD = `kind,entity,metric,value
latency,a->b,cycles,20
utilization,hbm0,channel_util,0.25
`;

describe("parseResults", () => {
  it("parses the four-column schema", () => {
    const rows = parseResults(GOOD);
    expect(rows).toHaveLength(2);
    expect(rows[0]).toEqual({
      kind: "latency",
      entity: "a->b",
      metric: "cycles",
      value: 20,
    });
  });

  it("names the missing column in schema errors", () => {
    expect(() =>
      parseResults("kind,entity,metric\nlatency,a,b\n"),
    ).toThrowError(/missing column "value"/);
  });

  it("rejects non-numeric values", () => {
    expect(() =>
      parseResults('kind,entity,metric,value\nlatency,a,b,wat\n'),
    ).toThrowError(SchemaError);
  });

  it("rejects header-only input as empty", () => {
    expect(() => parseResults("kind,entity,metric,value\n")).toThrowError(
      EmptyInputError,
    );
  });
});
