#!/usr/bin/env node
/**
 * figkit --csv results.csv --fig rd-vs-phi --out figure.svg
 */

import { readFileSync, writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { parseResults } from "./csv.js";
import { FIGURE_KINDS, FigureKind, renderFigure } from "./figures.js";

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .option("csv", { type: "string", demandOption: true, describe: "experiment CSV path" })
    .option("fig", {
      type: "string",
      demandOption: true,
      choices: FIGURE_KINDS,
      describe: "figure family",
    })
    .option("out", { type: "string", demandOption: true, describe: "output SVG path" })
    .strict()
    .parse();

  let text: string;
  try {
    text = readFileSync(argv.csv, "utf8");
  } catch (err) {
    console.error(`figkit: cannot read ${argv.csv}: ${err}`);
    return 2;
  }
  try {
    const rows = parseResults(text);
    const svg = renderFigure(rows, argv.fig as FigureKind);
    writeFileSync(argv.out, svg);
  } catch (err) {
    console.error(`figkit: ${err}`);
    return 3;
  }
  return 0;
}

main().then((code) => {
  process.exitCode = code;
});
