import { readFileSync } from "fs";
import Papa from "papaparse";

/** Column layouts of the upstream CSV files, matched verbatim. */
export const SWEEP_HEADER = [
  "experiment",
  "n",
  "g",
  "t",
  "axis",
  "k_param",
  "cost",
  "samples",
  "value",
  "std_error",
  "seed",
] as const;

export const LANDSCAPE_HEADER = ["epsilon", "cost_value", "n", "g", "t", "seed"] as const;

export interface SweepRow {
  experiment: string;
  n: number;
  g: number;
  t: number;
  axis: string;
  k_param: number;
  cost: string;
  samples: number;
  value: number;
  std_error: number;
  seed: number;
}

export interface LandscapeRow {
  epsilon: number;
  cost_value: number;
  n: number;
  g: number;
  t: number;
  seed: number;
}

function parseTable(path: string, expected: readonly string[]): Record<string, string>[] {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new Error(`cannot read CSV ${path}: ${(err as Error).message}`);
  }
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`${path}: CSV parse error: ${parsed.errors[0].message}`);
  }
  const fields = parsed.meta.fields ?? [];
  if (fields.join(",") !== expected.join(",")) {
    throw new Error(
      `${path}: header mismatch: expected "${expected.join(",")}", got "${fields.join(",")}"`,
    );
  }
  if (parsed.data.length === 0) {
    throw new Error(`${path}: table has no data rows`);
  }
  return parsed.data;
}

function num(path: string, row: Record<string, string>, key: string): number {
  const v = Number(row[key]);
  if (!Number.isFinite(v)) {
    throw new Error(`${path}: field "${key}" is not a finite number: "${row[key]}"`);
  }
  return v;
}

export function readSweepCsv(path: string): SweepRow[] {
  return parseTable(path, SWEEP_HEADER).map((row) => ({
    experiment: row.experiment,
    n: num(path, row, "n"),
    g: num(path, row, "g"),
    t: num(path, row, "t"),
    axis: row.axis,
    k_param: num(path, row, "k_param"),
    cost: row.cost,
    samples: num(path, row, "samples"),
    value: num(path, row, "value"),
    std_error: num(path, row, "std_error"),
    seed: num(path, row, "seed"),
  }));
}

export function readLandscapeCsv(path: string): LandscapeRow[] {
  return parseTable(path, LANDSCAPE_HEADER).map((row) => ({
    epsilon: num(path, row, "epsilon"),
    cost_value: num(path, row, "cost_value"),
    n: num(path, row, "n"),
    g: num(path, row, "g"),
    t: num(path, row, "t"),
    seed: num(path, row, "seed"),
  }));
}
