/**
 * Declared CSV schemas for the four scenario artifacts, plus strict parsing.
 *
 * Each scenario names its exact header, which column carries the series
 * (legend) labels, and which columns are plotted. Everything that is not the
 * series column must be a finite number in every row; violations raise
 * SchemaError naming the offending column.
 */
import Papa from "papaparse";

export type ScenarioId = "trajectory" | "dimscan" | "sweep" | "plateau";

export class SchemaError extends Error {
  readonly column: string | null;

  constructor(message: string, column: string | null = null) {
    super(message);
    this.name = "SchemaError";
    this.column = column;
  }
}

export interface ScenarioSchema {
  /** exact header, in order */
  columns: readonly string[];
  /** column whose distinct values become the legend */
  seriesColumn: string;
  x: string;
  y: string;
  logX: boolean;
  logY: boolean;
  xLabel: string;
  yLabel: string;
  title: string;
  /** draw markers on data points (for sparse curves) */
  markers: boolean;
  /** series drawn with a dashed stroke */
  dashed?: (series: string) => boolean;
}

export const SCENARIOS: Record<ScenarioId, ScenarioSchema> = {
  trajectory: {
    columns: ["series", "t_or_step", "q", "p"],
    seriesColumn: "series",
    x: "t_or_step",
    y: "q",
    logX: false,
    logY: false,
    xLabel: "t",
    yLabel: "q",
    title: "exact vs numerical trajectories",
    markers: false,
    dashed: (series) => series.startsWith("numerical"),
  },
  dimscan: {
    columns: ["variant", "D", "eps", "mean_accept", "mean_abs_z", "cost_units"],
    seriesColumn: "variant",
    x: "D",
    y: "mean_accept",
    logX: true,
    logY: false,
    xLabel: "dimensions",
    yLabel: "mean acceptance",
    title: "acceptance vs dimension",
    markers: true,
  },
  sweep: {
    columns: ["trace", "index", "q", "p", "H_full"],
    seriesColumn: "trace",
    x: "index",
    y: "H_full",
    logX: false,
    logY: false,
    xLabel: "sub-step index",
    yLabel: "full-data energy",
    title: "symmetric-sweep energy traces",
    markers: false,
  },
  plateau: {
    columns: ["variant", "eps", "endpoint_error"],
    seriesColumn: "variant",
    x: "eps",
    y: "endpoint_error",
    logX: true,
    logY: true,
    xLabel: "step size",
    yLabel: "endpoint error",
    title: "endpoint error vs step size",
    markers: true,
  },
};

export function isScenarioId(value: string): value is ScenarioId {
  return Object.prototype.hasOwnProperty.call(SCENARIOS, value);
}

export interface ParsedTable {
  /** row-major cells, keyed by column name, all present */
  rows: Record<string, string>[];
}

function checkHeader(schema: ScenarioSchema, fields: string[]): void {
  for (const expected of schema.columns) {
    if (!fields.includes(expected)) {
      throw new SchemaError(`missing column "${expected}"`, expected);
    }
  }
  for (const got of fields) {
    if (!schema.columns.includes(got)) {
      throw new SchemaError(`unexpected column "${got}"`, got);
    }
  }
  for (let i = 0; i < schema.columns.length; i += 1) {
    if (fields[i] !== schema.columns[i]) {
      throw new SchemaError(
        `column "${fields[i]}" out of order (expected "${schema.columns[i]}")`,
        fields[i],
      );
    }
  }
}

export function parseTable(schema: ScenarioSchema, csvText: string): ParsedTable {
  const parsed = Papa.parse<Record<string, string>>(csvText, {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  checkHeader(schema, fields);
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    const where = first.row === undefined ? "" : ` (row ${first.row + 1})`;
    throw new SchemaError(`malformed CSV${where}: ${first.message}`);
  }
  if (parsed.data.length === 0) {
    throw new SchemaError("no data rows");
  }
  const numericColumns = schema.columns.filter((c) => c !== schema.seriesColumn);
  parsed.data.forEach((row, i) => {
    for (const column of numericColumns) {
      const raw = row[column];
      if (raw === undefined || raw.trim() === "" || !Number.isFinite(Number(raw))) {
        throw new SchemaError(
          `column "${column}" row ${i + 1}: expected a finite number, got "${raw ?? ""}"`,
          column,
        );
      }
    }
  });
  return { rows: parsed.data };
}
