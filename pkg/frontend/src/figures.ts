/**
 * The four figure families over harness CSVs.  Pure views: every value is
 * read straight from the CSV, never recomputed.
 */

import { ResultRow } from "./csv.js";
import { buildSeries, pairSeries } from "./stats.js";
import { renderChart, renderPanel } from "./svg.js";

export type FigureKind = "rd-vs-phi" | "util-vs-rd" | "rd-vs-eta" | "panel";

export const FIGURE_KINDS: FigureKind[] = [
  "rd-vs-phi",
  "util-vs-rd",
  "rd-vs-eta",
  "panel",
];

export function renderFigure(rows: ResultRow[], kind: FigureKind): string {
  switch (kind) {
    case "rd-vs-phi":
      return renderChart(buildSeries(rows, "rd"), {
        title: "Weighted risk-difference vs constraint tightness",
        xLabel: "phi (decreasing rightward: more fair)",
        yLabel: "Weighted risk-difference",
        xReversed: true,
      });
    case "util-vs-rd":
      return renderChart(pairSeries(rows, "rd", "ndcg"), {
        title: "Utility vs weighted risk-difference",
        xLabel: "Weighted risk-difference",
        yLabel: "Utility (NDCG)",
      });
    case "rd-vs-eta":
      return renderChart(buildSeries(rows, "rd"), {
        title: "Weighted risk-difference vs noise level",
        xLabel: "Noise level eta (more noise rightward)",
        yLabel: "Weighted risk-difference",
      });
    case "panel":
      return renderPanel([
        renderChart(buildSeries(rows, "rd"), {
          title: "Weighted risk-difference",
          xLabel: "phi",
          yLabel: "RD",
          xReversed: true,
        }),
        renderChart(buildSeries(rows, "sl"), {
          title: "Weighted selection-lift",
          xLabel: "phi",
          yLabel: "SL",
          xReversed: true,
        }),
        renderChart(buildSeries(rows, "prop_rd"), {
          title: "Proportional risk-difference",
          xLabel: "phi",
          yLabel: "Prop-RD",
          xReversed: true,
        }),
        renderChart(pairSeries(rows, "rd", "ndcg"), {
          title: "Utility vs RD",
          xLabel: "RD",
          yLabel: "Utility (NDCG)",
        }),
      ]);
    default: {
      const exhaustive: never = kind;
      throw new Error(`unknown figure kind ${exhaustive}`);
    }
  }
}
