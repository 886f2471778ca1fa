/** Order statistics matching the harness conventions. */

export function median(values: number[]): number {
  if (values.length === 0) {
    throw new Error('median of an empty sample');
  }
  const sorted = [...values].sort((a, b) => a - b);
  const mid = Math.floor(sorted.length / 2);
  // mean-of-middle for even sample sizes
  return sorted.length % 2 === 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
}

/** Nearest-rank 95th percentile: the ceil(0.95 * count)-th order statistic. */
export function percentile95(values: number[]): number {
  if (values.length === 0) {
    throw new Error('percentile of an empty sample');
  }
  const sorted = [...values].sort((a, b) => a - b);
  const rank = Math.ceil(0.95 * sorted.length);
  return sorted[Math.min(rank, sorted.length) - 1];
}
