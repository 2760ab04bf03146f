/**
 * Parsing for simulator result CSVs.
 *
 * The schema is four columns -- kind,entity,metric,value -- where kind is
 * one of latency | utilization | performance | energy | check.
 */

import * as fs from "fs";
import Papa from "papaparse";

export const CHART_KINDS = [
  "latency",
  "utilization",
  "performance",
  "energy",
] as const;
export type ChartKind = (typeof CHART_KINDS)[number];

export interface ResultRow {
  kind: string;
  entity: string;
  metric: string;
  value: number;
}

export class SchemaError extends Error {}
export class EmptyInputError extends Error {}

const COLUMNS = ["kind", "entity", "metric", "value"];

export function parseResults(text: string, origin = "<csv>"): ResultRow[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new SchemaError(`${origin}: malformed CSV: ${e.message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const col of COLUMNS) {
    if (!fields.includes(col)) {
      throw new SchemaError(`${origin}: missing column "${col}"`);
    }
  }
  if (parsed.data.length === 0) {
    throw new EmptyInputError(`${origin}: no data rows`);
  }
  return parsed.data.map((row, i) => {
    const value = Number(row.value);
    if (!Number.isFinite(value)) {
      throw new SchemaError(
        `${origin}: row ${i + 2}: value "${row.value}" is not numeric`,
      );
    }
    return { kind: row.kind, entity: row.entity, metric: row.metric, value };
  });
}

export function readResults(path: string): ResultRow[] {
  let text: string;
  try {
    text = fs.readFileSync(path, "utf8");
  } catch (err) {
    throw new EmptyInputError(`${path}: ${(err as Error).message}`);
  }
  if (text.trim() === "" || text.trim() === COLUMNS.join(",")) {
    throw new EmptyInputError(`${path}: empty input`);
  }
  return parseResults(text, path);
}
