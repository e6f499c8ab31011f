/**
 * Command line entry: render <csv> <out.svg> [--vstar FLOAT]
 *
 * Reads the experiment CSV, draws one panel per rollout count with one
 * line per algorithm:check pair, and writes an SVG image. Exits nonzero
 * with a diagnostic on schema mismatches or empty input.
 */

import { readFileSync, writeFileSync } from 'fs';

import { buildCurves, parseCsv, SchemaError } from './csv.js';
import { renderFigure } from './figure.js';

export function run(argv: string[]): number {
  const positional: string[] = [];
  let vstar: number | undefined;
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === '--vstar') {
      vstar = Number(argv[++i]);
      if (Number.isNaN(vstar)) {
        console.error('render: --vstar expects a number');
        return 1;
      }
    } else {
      positional.push(argv[i]);
    }
  }
  if (positional.length !== 2) {
    console.error('usage: render <csv> <out.svg> [--vstar FLOAT]');
    return 1;
  }
  const [csvPath, outPath] = positional;

  let text: string;
  try {
    text = readFileSync(csvPath, 'utf8');
  } catch (err) {
    console.error(`render: cannot read ${csvPath}: ${(err as Error).message}`);
    return 1;
  }

  try {
    const rows = parseCsv(text);
    const curves = buildCurves(rows);
    const panels = new Set(curves.map((c) => c.n));
    const expectedSeries = new Set(curves.map((c) => `${c.variant}:${c.check}`));
    for (const n of panels) {
      const present = new Set(
        curves.filter((c) => c.n === n).map((c) => `${c.variant}:${c.check}`),
      );
      for (const key of expectedSeries) {
        if (!present.has(key)) {
          console.warn(`render: panel n=${n} is missing series ${key}; skipped`);
        }
      }
    }
    const svg = renderFigure(curves, { vstar });
    writeFileSync(outPath, svg);
    console.log(
      `render: wrote ${outPath} (${panels.size} panels, ` +
        `${expectedSeries.size} series)`,
    );
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`render: ${err.message}`);
      return 1;
    }
    console.error(`render: ${(err as Error).message}`);
    return 2;
  }
}

const isMain = process.argv[1]?.endsWith('render.js');
if (isMain) {
  process.exit(run(process.argv.slice(2)));
}
