/**
 * Per-(algorithm, x) aggregation: mean and standard error of the mean.
 */

import { EmptyGroupError, ResultRow } from "./csv.js";

export interface SeriesPoint {
  x: number;
  mean: number;
  sem: number;
  n: number;
}

export interface Series {
  algorithm: string;
  points: SeriesPoint[];
}

export type Metric = "rd" | "sl" | "prop_rd" | "ndcg" | "utility";

function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

function sem(values: number[]): number {
  if (values.length < 2) return 0;
  const mu = mean(values);
  const variance =
    values.reduce((a, b) => a + (b - mu) * (b - mu), 0) / (values.length - 1);
  return Math.sqrt(variance / values.length);
}

/** Group successful rows of one metric into per-algorithm series over x = phi. */
export function buildSeries(rows: ResultRow[], metric: Metric): Series[] {
  const byAlgo = new Map<string, Map<number, number[]>>();
  for (const row of rows) {
    if (row.status !== "ok") continue;
    const value = row[metric];
    if (value === null) continue;
    let inner = byAlgo.get(row.algorithm);
    if (!inner) {
      inner = new Map();
      byAlgo.set(row.algorithm, inner);
    }
    const bucket = inner.get(row.phi) ?? [];
    bucket.push(value);
    inner.set(row.phi, bucket);
  }
  const out: Series[] = [];
  for (const algorithm of [...byAlgo.keys()].sort()) {
    const inner = byAlgo.get(algorithm)!;
    const points = [...inner.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([x, values]) => ({ x, mean: mean(values), sem: sem(values), n: values.length }));
    if (points.length === 0) {
      throw new EmptyGroupError(`algorithm ${algorithm} has no successful rows`);
    }
    out.push({ algorithm, points });
  }
  if (out.length === 0) {
    throw new EmptyGroupError("no successful rows in the CSV");
  }
  return out;
}

/** Pair two metrics per (algorithm, phi): x from one, y from the other. */
export function pairSeries(
  rows: ResultRow[],
  xMetric: Metric,
  yMetric: Metric,
): Series[] {
  const xs = buildSeries(rows, xMetric);
  const ys = buildSeries(rows, yMetric);
  const yByAlgo = new Map(ys.map((s) => [s.algorithm, s]));
  return xs.map((sx) => {
    const sy = yByAlgo.get(sx.algorithm);
    if (!sy) throw new EmptyGroupError(`no ${yMetric} rows for ${sx.algorithm}`);
    const yByX = new Map(sy.points.map((pt) => [pt.x, pt]));
    const points = sx.points
      .filter((pt) => yByX.has(pt.x))
      .map((pt) => {
        const ypt = yByX.get(pt.x)!;
        return { x: pt.mean, mean: ypt.mean, sem: ypt.sem, n: ypt.n };
      })
      .sort((a, b) => a.x - b.x);
    return { algorithm: sx.algorithm, points };
  });
}
