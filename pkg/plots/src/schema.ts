/**
 * Parsing and validation of benchmark sample CSVs.
 *
 * Expected schema (exact header, in order):
 *   condition,n,max_interval_ms,job,latency_ns,matched
 * One row per job index; unmatched rows carry an empty latency_ns.
 */

export const CSV_HEADER = [
  'condition',
  'n',
  'max_interval_ms',
  'job',
  'latency_ns',
  'matched',
] as const;

export interface SampleRow {
  condition: string;
  n: number;
  maxIntervalMs: number | null;
  job: number;
  latencyNs: number | null;
  matched: boolean;
}

export class SchemaMismatchError extends Error {
  constructor(source: string, detail: string) {
    super(`${source}: ${detail}`);
    this.name = 'SchemaMismatchError';
  }
}

export class EmptyInputError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = 'EmptyInputError';
  }
}

function parseIntStrict(field: string, value: string, source: string, line: number): number {
  if (!/^-?\d+$/.test(value)) {
    throw new SchemaMismatchError(source, `line ${line}: ${field} is not an integer: '${value}'`);
  }
  return Number(value);
}

export function parseCsv(text: string, source: string): SampleRow[] {
  const lines = text.split('\n').filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaMismatchError(source, 'file is empty, expected a header row');
  }
  const header = lines[0].split(',');
  if (header.length !== CSV_HEADER.length || header.some((h, i) => h !== CSV_HEADER[i])) {
    throw new SchemaMismatchError(
      source,
      `header '${lines[0]}' does not match '${CSV_HEADER.join(',')}'`,
    );
  }
  const rows: SampleRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(',');
    if (parts.length !== CSV_HEADER.length) {
      throw new SchemaMismatchError(source, `line ${i + 1}: expected ${CSV_HEADER.length} fields`);
    }
    const [condition, n, interval, job, latency, matched] = parts;
    if (matched !== '0' && matched !== '1') {
      throw new SchemaMismatchError(source, `line ${i + 1}: matched must be 0 or 1`);
    }
    rows.push({
      condition,
      n: parseIntStrict('n', n, source, i + 1),
      maxIntervalMs: interval === '' ? null : parseIntStrict('max_interval_ms', interval, source, i + 1),
      job: parseIntStrict('job', job, source, i + 1),
      latencyNs: latency === '' ? null : parseIntStrict('latency_ns', latency, source, i + 1),
      matched: matched === '1',
    });
  }
  return rows;
}
