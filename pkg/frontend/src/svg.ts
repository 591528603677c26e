/**
 * Deterministic SVG line charts with error bars.
 *
 * Everything is assembled from strings with fixed number formatting, so a
 * given input always yields byte-identical output.
 */

import { Series } from "./stats.js";

export interface AxesSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  /** phi axes decrease toward the right in the source figures */
  xReversed?: boolean;
  width?: number;
  height?: number;
}

const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
];

const MARGIN = { top: 34, right: 14, bottom: 46, left: 56 };

function fmt(value: number): string {
  return value.toFixed(2);
}

function fmtTick(value: number): string {
  const rounded = Number(value.toPrecision(4));
  return `${rounded}`;
}

function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const factor = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const nice = step * factor;
  const start = Math.ceil(lo / nice) * nice;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += nice) ticks.push(Number(v.toFixed(10)));
  return ticks;
}

export function renderChart(series: Series[], spec: AxesSpec): string {
  const width = spec.width ?? 640;
  const height = spec.height ?? 420;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const yLo = series.flatMap((s) => s.points.map((p) => p.mean - p.sem));
  const yHi = series.flatMap((s) => s.points.map((p) => p.mean + p.sem));
  let xMin = Math.min(...xs);
  let xMax = Math.max(...xs);
  if (xMax === xMin) {
    xMin -= 0.5;
    xMax += 0.5;
  }
  const yPad = 0.05 * (Math.max(...yHi) - Math.min(...yLo) || 1);
  const yMin = Math.min(...yLo) - yPad;
  const yMax = Math.max(...yHi) + yPad;

  const sx = (v: number) => {
    const t = (v - xMin) / (xMax - xMin);
    const tt = spec.xReversed ? 1 - t : t;
    return MARGIN.left + tt * plotW;
  };
  const sy = (v: number) => MARGIN.top + (1 - (v - yMin) / (yMax - yMin)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${fmt(width / 2)}" y="20" text-anchor="middle" font-size="14">${spec.title}</text>`,
  );
  // frame
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  // ticks
  for (const t of niceTicks(xMin, xMax)) {
    const px = sx(t);
    parts.push(
      `<line x1="${fmt(px)}" y1="${fmt(MARGIN.top + plotH)}" x2="${fmt(px)}" y2="${fmt(MARGIN.top + plotH + 5)}" stroke="#333"/>`,
    );
    parts.push(
      `<text x="${fmt(px)}" y="${fmt(MARGIN.top + plotH + 18)}" text-anchor="middle" font-size="11">${fmtTick(t)}</text>`,
    );
  }
  for (const t of niceTicks(yMin, yMax)) {
    const py = sy(t);
    parts.push(
      `<line x1="${fmt(MARGIN.left - 5)}" y1="${fmt(py)}" x2="${fmt(MARGIN.left)}" y2="${fmt(py)}" stroke="#333"/>`,
    );
    parts.push(
      `<text x="${fmt(MARGIN.left - 8)}" y="${fmt(py + 4)}" text-anchor="end" font-size="11">${fmtTick(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${fmt(MARGIN.left + plotW / 2)}" y="${fmt(height - 10)}" text-anchor="middle" font-size="12">${spec.xLabel}</text>`,
  );
  parts.push(
    `<text x="16" y="${fmt(MARGIN.top + plotH / 2)}" text-anchor="middle" font-size="12" transform="rotate(-90 16 ${fmt(MARGIN.top + plotH / 2)})">${spec.yLabel}</text>`,
  );
  // series
  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const pts = s.points.map((p) => `${fmt(sx(p.x))},${fmt(sy(p.mean))}`).join(" ");
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.8"/>`,
    );
    for (const p of s.points) {
      const px = sx(p.x);
      parts.push(
        `<circle cx="${fmt(px)}" cy="${fmt(sy(p.mean))}" r="3" fill="${color}"/>`,
      );
      if (p.sem > 0) {
        const top = sy(p.mean + p.sem);
        const bot = sy(p.mean - p.sem);
        parts.push(
          `<line x1="${fmt(px)}" y1="${fmt(top)}" x2="${fmt(px)}" y2="${fmt(bot)}" stroke="${color}" stroke-width="1"/>`,
        );
        parts.push(
          `<line x1="${fmt(px - 3)}" y1="${fmt(top)}" x2="${fmt(px + 3)}" y2="${fmt(top)}" stroke="${color}" stroke-width="1"/>`,
        );
        parts.push(
          `<line x1="${fmt(px - 3)}" y1="${fmt(bot)}" x2="${fmt(px + 3)}" y2="${fmt(bot)}" stroke="${color}" stroke-width="1"/>`,
        );
      }
    }
    // legend entry
    const ly = MARGIN.top + 14 + idx * 16;
    const lx = MARGIN.left + plotW - 130;
    parts.push(
      `<line x1="${fmt(lx)}" y1="${fmt(ly - 4)}" x2="${fmt(lx + 18)}" y2="${fmt(ly - 4)}" stroke="${color}" stroke-width="1.8"/>`,
    );
    parts.push(
      `<text x="${fmt(lx + 24)}" y="${fmt(ly)}" font-size="11">${s.algorithm}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

/** Lay out pre-rendered charts in a two-column grid inside one SVG. */
export function renderPanel(charts: string[], width = 640, height = 420): string {
  const cols = 2;
  const rows = Math.ceil(charts.length / cols);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${cols * width}" height="${rows * height}" viewBox="0 0 ${cols * width} ${rows * height}">`,
  );
  charts.forEach((chart, idx) => {
    const x = (idx % cols) * width;
    const y = Math.floor(idx / cols) * height;
    const inner = chart
      .replace(/^<svg[^>]*>/, `<g transform="translate(${x} ${y})">`)
      .replace(/<\/svg>\s*$/, "</g>");
    parts.push(inner);
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
