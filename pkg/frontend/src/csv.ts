/**
 * Strict reader for the experiment harness CSV schema.
 */

import Papa from "papaparse";

export const CSV_COLUMNS = [
  "algorithm",
  "phi",
  "iter",
  "seed",
  "rd",
  "sl",
  "prop_rd",
  "ndcg",
  "utility",
  "runtime_ms",
  "status",
] as const;

export type CsvColumn = (typeof CSV_COLUMNS)[number];

export interface ResultRow {
  algorithm: string;
  phi: number;
  iter: number;
  seed: string;
  rd: number | null;
  sl: number | null;
  prop_rd: number | null;
  ndcg: number | null;
  utility: number | null;
  runtime_ms: number | null;
  status: string;
}

export class MissingColumnError extends Error {}
export class EmptyGroupError extends Error {}

function numOrNull(value: string | undefined): number | null {
  if (value === undefined || value === "") return null;
  const parsed = Number(value);
  if (Number.isNaN(parsed)) throw new Error(`not a number: ${value}`);
  return parsed;
}

export function parseResults(text: string): ResultRow[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`CSV parse failure: ${parsed.errors[0].message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const col of CSV_COLUMNS) {
    if (!fields.includes(col)) {
      throw new MissingColumnError(`CSV is missing required column '${col}'`);
    }
  }
  return parsed.data.map((raw) => ({
    algorithm: raw.algorithm,
    phi: Number(raw.phi),
    iter: Number(raw.iter),
    seed: raw.seed,
    rd: numOrNull(raw.rd),
    sl: numOrNull(raw.sl),
    prop_rd: numOrNull(raw.prop_rd),
    ndcg: numOrNull(raw.ndcg),
    utility: numOrNull(raw.utility),
    runtime_ms: numOrNull(raw.runtime_ms),
    status: raw.status,
  }));
}
