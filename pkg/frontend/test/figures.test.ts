import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { MissingColumnError, parseResults } from "../src/csv.js";
import { buildSeries, pairSeries } from "../src/stats.js";
import { FIGURE_KINDS, renderFigure } from "../src/figures.js";

const here = dirname(fileURLToPath(import.meta.url));
const sweepCsv = readFileSync(join(here, "golden", "synthetic-sweep.csv"), "utf8");
const noiseCsv = readFileSync(join(here, "golden", "noise-sweep.csv"), "utf8");

describe("csv parsing", () => {
  it("parses the golden sweep", () => {
    const rows = parseResults(sweepCsv);
    expect(rows.length).toBeGreaterThan(0);
    expect(rows[0].algorithm).toBeTypeOf("string");
    expect(rows.every((r) => Number.isFinite(r.phi))).toBe(true);
  });

  it("rejects missing columns", () => {
    expect(() => parseResults("algorithm,phi\nuncons,1.0\n")).toThrow(
      MissingColumnError,
    );
  });

  it("treats blanks as nulls", () => {
    const rows = parseResults(sweepCsv);
    const failed = rows.filter((r) => r.status !== "ok");
    for (const row of failed) {
      expect(row.rd).toBeNull();
    }
  });
});

describe("series statistics", () => {
  it("aggregates means with error bars", () => {
    const series = buildSeries(parseResults(sweepCsv), "rd");
    for (const s of series) {
      for (const p of s.points) {
        expect(p.mean).toBeGreaterThanOrEqual(0);
        expect(p.mean).toBeLessThanOrEqual(1);
        expect(p.sem).toBeGreaterThanOrEqual(0);
        expect(p.n).toBeGreaterThan(1);
      }
    }
  });

  it("uncons series is flat across phi", () => {
    const series = buildSeries(parseResults(sweepCsv), "rd");
    const uncons = series.find((s) => s.algorithm === "uncons")!;
    const means = uncons.points.map((p) => p.mean);
    for (const m of means) {
      expect(Math.abs(m - means[0])).toBeLessThan(1e-12);
    }
  });

  it("pairs metrics per phi", () => {
    const series = pairSeries(parseResults(sweepCsv), "rd", "ndcg");
    for (const s of series) {
      expect(s.points.length).toBeGreaterThan(0);
      for (const p of s.points) {
        expect(p.mean).toBeLessThanOrEqual(1 + 1e-9);
      }
    }
  });
});

describe("figure rendering", () => {
  it("renders every family to valid SVG", () => {
    for (const kind of FIGURE_KINDS) {
      const csv = kind === "rd-vs-eta" ? noiseCsv : sweepCsv;
      const svg = renderFigure(parseResults(csv), kind);
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
    }
  });

  it("is byte-stable across renders", () => {
    for (const kind of FIGURE_KINDS) {
      const csv = kind === "rd-vs-eta" ? noiseCsv : sweepCsv;
      const a = renderFigure(parseResults(csv), kind);
      const b = renderFigure(parseResults(csv), kind);
      expect(createHash("sha256").update(a).digest("hex")).toBe(
        createHash("sha256").update(b).digest("hex"),
      );
    }
  });

  it("matches the committed snapshot hashes", () => {
    const expected = JSON.parse(
      readFileSync(join(here, "golden", "svg-hashes.json"), "utf8"),
    ) as Record<string, string>;
    for (const kind of FIGURE_KINDS) {
      const csv = kind === "rd-vs-eta" ? noiseCsv : sweepCsv;
      const svg = renderFigure(parseResults(csv), kind);
      expect(createHash("sha256").update(svg).digest("hex")).toBe(expected[kind]);
    }
  });

  it("reproduces the source ordering: nresilient on top for phi <= 1.2", () => {
    const series = buildSeries(parseResults(sweepCsv), "rd");
    const byAlgo = new Map(series.map((s) => [s.algorithm, s]));
    const nr = byAlgo.get("nresilient")!;
    for (const p of nr.points) {
      if (p.x > 1.2) continue;
      for (const [algo, s] of byAlgo) {
        if (algo === "nresilient") continue;
        const other = s.points.find((q) => Math.abs(q.x - p.x) < 1e-9);
        if (!other) continue;
        expect(p.mean).toBeGreaterThan(other.mean);
      }
    }
  });
});
