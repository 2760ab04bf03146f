/**
 * Deterministic SVG bar charts over result rows.
 *
 * One bar per (entity, metric series); min-max error bars appear wherever
 * per-sample data exists: either repeated (entity, metric) rows, or an
 * explicit min_X / mean_X / max_X triplet for the same entity.  Output is
 * byte-stable: fixed figure size, fixed precision, no timestamps.
 */

import { ChartKind, ResultRow, SchemaError } from "./csv";

export interface Labels {
  title?: string;
  xlabel?: string;
  ylabel?: string;
}

export interface Bar {
  label: string;
  value: number;
  lo?: number;
  hi?: number;
}

const WIDTH = 720;
const HEIGHT = 420;
const MARGIN = { top: 48, right: 24, bottom: 96, left: 72 };

function fmt(x: number): string {
  return Number(x.toFixed(3)).toString();
}

/** Collapse rows of one chart kind into labelled bars. */
export function toBars(rows: ResultRow[], kind: ChartKind): Bar[] {
  const selected = rows.filter((r) => r.kind === kind);
  if (selected.length === 0) {
    throw new SchemaError(`no rows of kind "${kind}"`);
  }
  const bars: Bar[] = [];
  const byEntity = new Map<string, ResultRow[]>();
  for (const row of selected) {
    const group = byEntity.get(row.entity) ?? [];
    group.push(row);
    byEntity.set(row.entity, group);
  }
  for (const [entity, group] of byEntity) {
    // Explicit min/mean/max triplets become one bar with whiskers.
    const stats = new Map<string, { [k: string]: number }>();
    const plain: ResultRow[] = [];
    for (const row of group) {
      const m = row.metric.match(/^(min|max|mean)(?:_(.*))?$/);
      if (m) {
        const suffix = m[2] ?? "";
        const entry = stats.get(suffix) ?? {};
        entry[m[1]] = row.value;
        stats.set(suffix, entry);
      } else {
        plain.push(row);
      }
    }
    for (const [suffix, entry] of stats) {
      if (entry.mean === undefined) {
        for (const [name, value] of Object.entries(entry)) {
          plain.push({
            kind,
            entity,
            metric: suffix ? `${name}_${suffix}` : name,
            value,
          });
        }
        continue;
      }
      bars.push({
        label: suffix ? `${entity} ${suffix}` : entity,
        value: entry.mean,
        lo: entry.min,
        hi: entry.max,
      });
    }
    // Remaining metrics: one bar each; repeated samples get whiskers.
    const byMetric = new Map<string, number[]>();
    for (const row of plain) {
      const vals = byMetric.get(row.metric) ?? [];
      vals.push(row.value);
      byMetric.set(row.metric, vals);
    }
    for (const [metric, vals] of byMetric) {
      const mean = vals.reduce((a, b) => a + b, 0) / vals.length;
      bars.push({
        label: `${entity} ${metric}`,
        value: mean,
        lo: vals.length > 1 ? Math.min(...vals) : undefined,
        hi: vals.length > 1 ? Math.max(...vals) : undefined,
      });
    }
  }
  return bars;
}

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderSvg(bars: Bar[], kind: ChartKind, labels: Labels = {}): string {
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const top = Math.max(...bars.map((b) => b.hi ?? b.value), 0);
  const scale = top > 0 ? plotH / (top * 1.05) : 1;
  const slot = plotW / bars.length;
  const barW = Math.min(48, slot * 0.7);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  const title = labels.title ?? `${kind} results`;
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">${esc(title)}</text>`,
  );

  // Horizontal gridlines at quarters of the axis.
  for (let i = 0; i <= 4; i++) {
    const v = (top * 1.05 * i) / 4;
    const y = HEIGHT - MARGIN.bottom - v * scale;
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(y)}" x2="${WIDTH - MARGIN.right}" y2="${fmt(y)}" stroke="#ddd"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${fmt(y + 4)}" text-anchor="end" font-size="11">${fmt(v)}</text>`,
    );
  }

  bars.forEach((bar, i) => {
    const cx = MARGIN.left + slot * i + slot / 2;
    const h = bar.value * scale;
    const y = HEIGHT - MARGIN.bottom - h;
    parts.push(
      `<rect x="${fmt(cx - barW / 2)}" y="${fmt(y)}" width="${fmt(barW)}" height="${fmt(h)}" fill="#4878a8"/>`,
    );
    if (bar.lo !== undefined && bar.hi !== undefined && bar.hi > bar.lo) {
      const yLo = HEIGHT - MARGIN.bottom - bar.lo * scale;
      const yHi = HEIGHT - MARGIN.bottom - bar.hi * scale;
      parts.push(
        `<line x1="${fmt(cx)}" y1="${fmt(yLo)}" x2="${fmt(cx)}" y2="${fmt(yHi)}" stroke="black"/>`,
      );
      for (const yy of [yLo, yHi]) {
        parts.push(
          `<line x1="${fmt(cx - 6)}" y1="${fmt(yy)}" x2="${fmt(cx + 6)}" y2="${fmt(yy)}" stroke="black"/>`,
        );
      }
    }
    parts.push(
      `<text x="${fmt(cx)}" y="${HEIGHT - MARGIN.bottom + 12}" text-anchor="end" font-size="10" transform="rotate(-45 ${fmt(cx)} ${HEIGHT - MARGIN.bottom + 12})">${esc(bar.label)}</text>`,
    );
  });

  // Axis line and labels.
  parts.push(
    `<line x1="${MARGIN.left}" y1="${HEIGHT - MARGIN.bottom}" x2="${WIDTH - MARGIN.right}" y2="${HEIGHT - MARGIN.bottom}" stroke="black"/>`,
  );
  if (labels.xlabel) {
    parts.push(
      `<text x="${WIDTH / 2}" y="${HEIGHT - 8}" text-anchor="middle" font-size="12">${esc(labels.xlabel)}</text>`,
    );
  }
  if (labels.ylabel) {
    parts.push(
      `<text x="16" y="${HEIGHT / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 ${HEIGHT / 2})">${esc(labels.ylabel)}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export function renderChart(
  rows: ResultRow[],
  kind: ChartKind,
  labels: Labels = {},
): string {
  return renderSvg(toBars(rows, kind), kind, labels);
}
