export { CSV_HEADER, EmptyInputError, parseCsv, SchemaMismatchError } from './schema.js';
export type { SampleRow } from './schema.js';
export { median, percentile95 } from './stats.js';
export { buildTable, cellLabel, labelOrder } from './table.js';
export type { Cell } from './table.js';
export { renderSvg } from './svg.js';
export { expandGlob, main, parseArgs, render, UsageError } from './cli.js';
export type { PlotConfig } from './cli.js';
