/**
 * Deterministic SVG rendering for scenario CSVs.
 *
 * The output is a pure function of the CSV text and the plot spec: series
 * are sorted before coloring, coordinates are formatted with fixed
 * precision, and the true data extents are embedded as data-* attributes so
 * tests can compare plotted ranges to the CSV without touching pixels.
 */
import { mkdir, readFile, writeFile } from "node:fs/promises";
import { dirname } from "node:path";

import {
  SCENARIOS,
  ScenarioId,
  ScenarioSchema,
  SchemaError,
  parseTable,
} from "./schemas.js";

export interface PlotSpec {
  scenario: ScenarioId;
  input: string;
  output: string;
  /** override the scenario's default axis scales */
  logX?: boolean;
  logY?: boolean;
}

const WIDTH = 720;
const HEIGHT = 480;
const BOX = { left: 64, right: 540, top: 48, bottom: 432 };

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

interface Point {
  x: number;
  y: number;
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function formatTick(value: number): string {
  if (value === 0) return "0";
  const magnitude = Math.abs(value);
  if (magnitude >= 1e-3 && magnitude < 1e4) {
    return String(Number(value.toPrecision(4)));
  }
  return value.toExponential(2);
}

/** Maps data values into pixel coordinates, optionally through log10. */
class Scale {
  private readonly lo: number;
  private readonly span: number;

  constructor(
    values: number[],
    private readonly log: boolean,
    private readonly pxLo: number,
    private readonly pxHi: number,
    column: string,
  ) {
    if (log) {
      for (const v of values) {
        if (v <= 0) {
          throw new SchemaError(
            `column "${column}": log axis needs positive values, got ${v}`,
            column,
          );
        }
      }
    }
    const mapped = log ? values.map(Math.log10) : values;
    this.lo = Math.min(...mapped);
    this.span = Math.max(...mapped) - this.lo;
  }

  toPx(value: number): number {
    const v = this.log ? Math.log10(value) : value;
    const frac = this.span === 0 ? 0.5 : (v - this.lo) / this.span;
    return this.pxLo + frac * (this.pxHi - this.pxLo);
  }
}

export function renderSvg(
  scenario: ScenarioId,
  csvText: string,
  toggles: { logX?: boolean; logY?: boolean } = {},
): string {
  const schema: ScenarioSchema = SCENARIOS[scenario];
  const table = parseTable(schema, csvText);
  const logX = toggles.logX ?? schema.logX;
  const logY = toggles.logY ?? schema.logY;

  const bySeries = new Map<string, Point[]>();
  const xs: number[] = [];
  const ys: number[] = [];
  for (const row of table.rows) {
    const series = row[schema.seriesColumn];
    const point = { x: Number(row[schema.x]), y: Number(row[schema.y]) };
    xs.push(point.x);
    ys.push(point.y);
    let bucket = bySeries.get(series);
    if (bucket === undefined) {
      bucket = [];
      bySeries.set(series, bucket);
    }
    bucket.push(point);
  }
  const seriesNames = [...bySeries.keys()].sort();

  const sx = new Scale(xs, logX, BOX.left, BOX.right, schema.x);
  // pixel y grows downward
  const sy = new Scale(ys, logY, BOX.bottom, BOX.top, schema.y);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
      `font-family="monospace" font-size="12" ` +
      `data-scenario="${scenario}" ` +
      `data-x-column="${schema.x}" data-y-column="${schema.y}" ` +
      `data-x-scale="${logX ? "log10" : "linear"}" ` +
      `data-y-scale="${logY ? "log10" : "linear"}" ` +
      `data-x-min="${Math.min(...xs)}" data-x-max="${Math.max(...xs)}" ` +
      `data-y-min="${Math.min(...ys)}" data-y-max="${Math.max(...ys)}" ` +
      `data-series="${escapeXml(seriesNames.join(";"))}">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<rect x="${BOX.left}" y="${BOX.top}" width="${BOX.right - BOX.left}" ` +
      `height="${BOX.bottom - BOX.top}" fill="none" stroke="#333"/>`,
  );
  parts.push(
    `<text x="${(BOX.left + BOX.right) / 2}" y="24" text-anchor="middle" ` +
      `font-size="14">${escapeXml(schema.title)}</text>`,
  );

  // axis labels and min/max ticks; the full extents also live in data-*
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  parts.push(
    `<text x="${(BOX.left + BOX.right) / 2}" y="${HEIGHT - 12}" ` +
      `text-anchor="middle">${escapeXml(schema.xLabel)}${logX ? " (log)" : ""}</text>`,
    `<text x="16" y="${(BOX.top + BOX.bottom) / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${(BOX.top + BOX.bottom) / 2})">` +
      `${escapeXml(schema.yLabel)}${logY ? " (log)" : ""}</text>`,
    `<text x="${BOX.left}" y="${BOX.bottom + 16}" text-anchor="middle" ` +
      `class="tick">${formatTick(xMin)}</text>`,
    `<text x="${BOX.right}" y="${BOX.bottom + 16}" text-anchor="middle" ` +
      `class="tick">${formatTick(xMax)}</text>`,
    `<text x="${BOX.left - 6}" y="${BOX.bottom + 4}" text-anchor="end" ` +
      `class="tick">${formatTick(yMin)}</text>`,
    `<text x="${BOX.left - 6}" y="${BOX.top + 4}" text-anchor="end" ` +
      `class="tick">${formatTick(yMax)}</text>`,
  );

  parts.push(`<g class="plot">`);
  seriesNames.forEach((name, i) => {
    const color = PALETTE[i % PALETTE.length];
    const dashed = schema.dashed?.(name) ?? false;
    const points = bySeries
      .get(name)!
      .map((p) => `${sx.toPx(p.x).toFixed(2)},${sy.toPx(p.y).toFixed(2)}`)
      .join(" ");
    parts.push(
      `<polyline class="series" data-name="${escapeXml(name)}" points="${points}" ` +
        `fill="none" stroke="${color}" stroke-width="1.5"` +
        `${dashed ? ` stroke-dasharray="6 4"` : ""}/>`,
    );
    if (schema.markers) {
      for (const p of bySeries.get(name)!) {
        parts.push(
          `<circle class="marker" data-name="${escapeXml(name)}" ` +
            `cx="${sx.toPx(p.x).toFixed(2)}" cy="${sy.toPx(p.y).toFixed(2)}" ` +
            `r="3" fill="${color}"/>`,
        );
      }
    }
  });
  parts.push(`</g>`);

  parts.push(`<g class="legend">`);
  seriesNames.forEach((name, i) => {
    const y = BOX.top + 12 + 18 * i;
    const color = PALETTE[i % PALETTE.length];
    const dashed = schema.dashed?.(name) ?? false;
    parts.push(
      `<line x1="${BOX.right + 10}" y1="${y - 4}" x2="${BOX.right + 34}" ` +
        `y2="${y - 4}" stroke="${color}" stroke-width="1.5"` +
        `${dashed ? ` stroke-dasharray="6 4"` : ""}/>`,
      `<text class="legend-label" x="${BOX.right + 40}" y="${y}">` +
        `${escapeXml(name)}</text>`,
    );
  });
  parts.push(`</g>`);
  parts.push(`</svg>`);
  return parts.join("\n");
}

/** Reads the CSV, renders it, writes the SVG; returns the output path. */
export async function render(spec: PlotSpec): Promise<string> {
  const csvText = await readFile(spec.input, "utf8");
  const svg = renderSvg(spec.scenario, csvText, {
    logX: spec.logX,
    logY: spec.logY,
  });
  await mkdir(dirname(spec.output), { recursive: true });
  await writeFile(spec.output, svg, "utf8");
  return spec.output;
}
