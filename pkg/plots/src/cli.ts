#!/usr/bin/env node
/**
 * plot --in <glob> [--in <glob> ...] --out <file> [--log]
 *
 * Reads benchmark sample CSVs, extracts the per-(condition, N) summary table,
 * and writes an SVG chart. Exit codes: 0 ok, 1 usage, 2 bad input
 * (schema mismatch or nothing to plot).
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { EmptyInputError, parseCsv, SampleRow, SchemaMismatchError } from './schema.js';
import { renderSvg } from './svg.js';
import { buildTable, Cell } from './table.js';

export interface PlotConfig {
  inputs: string[];
  output: string;
  logScale: boolean;
}

export function expandGlob(pattern: string): string[] {
  // supports a single '*' segment in the basename, which covers the
  // harness's one-file-per-cell layout
  const dir = path.dirname(pattern);
  const base = path.basename(pattern);
  if (!base.includes('*')) {
    return fs.existsSync(pattern) ? [pattern] : [];
  }
  const re = new RegExp(
    '^' + base.split('*').map((s) => s.replace(/[.+?^${}()|[\]\\]/g, '\\$&')).join('.*') + '$',
  );
  if (!fs.existsSync(dir)) return [];
  return fs
    .readdirSync(dir)
    .filter((f) => re.test(f))
    .sort()
    .map((f) => path.join(dir, f));
}

export function parseArgs(argv: string[]): PlotConfig {
  const inputs: string[] = [];
  let output: string | null = null;
  let logScale = false;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === '--in') {
      const v = argv[++i];
      if (v === undefined) throw new UsageError('--in needs a value');
      inputs.push(v);
    } else if (arg === '--out') {
      const v = argv[++i];
      if (v === undefined) throw new UsageError('--out needs a value');
      output = v;
    } else if (arg === '--log') {
      logScale = true;
    } else {
      throw new UsageError(`unknown argument '${arg}'`);
    }
  }
  if (inputs.length === 0 || output === null) {
    throw new UsageError('required: --in <glob> --out <file> [--log]');
  }
  return { inputs, output, logScale };
}

export class UsageError extends Error {}

export function loadRows(cfg: PlotConfig): SampleRow[] {
  const files = cfg.inputs.flatMap(expandGlob);
  if (files.length === 0) {
    throw new EmptyInputError(`no files match ${cfg.inputs.join(', ')}`);
  }
  return files.flatMap((f) => parseCsv(fs.readFileSync(f, 'utf-8'), f));
}

/** Reads the inputs, writes the chart, returns the extracted data table. */
export function render(cfg: PlotConfig): Cell[] {
  const table = buildTable(loadRows(cfg));
  fs.writeFileSync(cfg.output, renderSvg(table, cfg.logScale));
  return table;
}

export function main(argv: string[]): number {
  let cfg: PlotConfig;
  try {
    cfg = parseArgs(argv);
  } catch (e) {
    console.error(`usage error: ${(e as Error).message}`);
    return 1;
  }
  try {
    const table = render(cfg);
    for (const cell of table) {
      const med = cell.medianNs === null ? 'n/a' : `${(cell.medianNs / 1e6).toFixed(2)}ms`;
      console.error(
        `${cell.label} N=${cell.n}: median ${med}, match ${(cell.matchRate * 100).toFixed(1)}%`,
      );
    }
    console.error(`wrote ${cfg.output}`);
    return 0;
  } catch (e) {
    if (e instanceof SchemaMismatchError || e instanceof EmptyInputError) {
      console.error(`${(e as Error).name}: ${(e as Error).message}`);
      return 2;
    }
    throw e;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
