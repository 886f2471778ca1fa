/**
 * Grouped comparison chart: x = fork-join width, one bar per condition label,
 * bar height = median join latency with a whisker up to the 95th percentile.
 * Pure string assembly; same cells in, same SVG out.
 */

import { Cell, labelOrder } from './table.js';

const PALETTE = ['#2a9d8f', '#264653', '#e9c46a', '#f4a261', '#e76f51', '#9b5de5'];

const MARGIN = { top: 56, right: 24, bottom: 48, left: 86 };

function formatMs(ns: number): string {
  const msValue = ns / 1e6;
  if (msValue >= 1000) return `${(msValue / 1000).toPrecision(3)}s`;
  if (msValue >= 1) return `${Number(msValue.toPrecision(3))}ms`;
  return `${Number((ns / 1e3).toPrecision(3))}us`;
}

export function renderSvg(cells: Cell[], logScale: boolean,
                          width = 880, height = 480): string {
  const labels = [...new Set(cells.map((c) => c.label))]
    .sort((a, b) => {
      const [ga, ia] = labelOrder(a);
      const [gb, ib] = labelOrder(b);
      return ga - gb || ia - ib;
    });
  const widths = [...new Set(cells.map((c) => c.n))].sort((a, b) => a - b);
  const byKey = new Map(cells.map((c) => [`${c.label}/${c.n}`, c]));

  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const values = cells.flatMap((c) => [c.medianNs ?? 0, c.p95Ns ?? 0]);
  const maxVal = Math.max(1, ...values);
  // log floor: half a decade under the smallest positive value, at least 10us
  const positives = values.filter((v) => v > 0);
  const logFloor = Math.max(1e4, positives.length ? Math.min(...positives) / 3 : 1e4);
  const logTop = Math.pow(10, Math.ceil(Math.log10(maxVal)));

  const yOf = (ns: number): number => {
    if (logScale) {
      const clamped = Math.max(ns, logFloor);
      const frac = Math.log10(clamped / logFloor) / Math.log10(logTop / logFloor);
      return MARGIN.top + plotH * (1 - frac);
    }
    return MARGIN.top + plotH * (1 - ns / (maxVal * 1.08));
  };

  const out: string[] = [];
  out.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif">`);
  out.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  out.push(`<text x="${MARGIN.left}" y="24" font-size="16" fill="#222">Join latency by condition (median, whisker to p95)</text>`);

  // y axis with ticks
  const ticks: number[] = [];
  if (logScale) {
    for (let v = logFloor; v <= logTop * 1.0001; v *= 10) ticks.push(v);
  } else {
    for (let i = 0; i <= 4; i++) ticks.push((maxVal * 1.08 * i) / 4);
  }
  for (const t of ticks) {
    const y = yOf(t);
    out.push(`<line x1="${MARGIN.left}" y1="${y.toFixed(2)}" x2="${width - MARGIN.right}" y2="${y.toFixed(2)}" stroke="#ddd"/>`);
    out.push(`<text x="${MARGIN.left - 8}" y="${(y + 4).toFixed(2)}" font-size="11" fill="#444" text-anchor="end">${t === 0 ? '0' : formatMs(t)}</text>`);
  }

  const groupW = plotW / widths.length;
  const barW = Math.min(34, (groupW * 0.8) / labels.length);
  widths.forEach((n, gi) => {
    const groupX = MARGIN.left + gi * groupW + groupW / 2;
    out.push(`<text x="${groupX.toFixed(2)}" y="${height - 18}" font-size="13" fill="#222" text-anchor="middle">N = ${n}</text>`);
    labels.forEach((label, si) => {
      const cell = byKey.get(`${label}/${n}`);
      if (!cell) return;
      const x = groupX + (si - labels.length / 2) * barW + barW * 0.1;
      const color = PALETTE[si % PALETTE.length];
      const medianVal = cell.medianNs ?? 0;
      const yMed = yOf(medianVal);
      const yBase = yOf(logScale ? logFloor : 0);
      out.push(`<rect x="${x.toFixed(2)}" y="${yMed.toFixed(2)}" width="${(barW * 0.8).toFixed(2)}" height="${Math.max(0.5, yBase - yMed).toFixed(2)}" fill="${color}"><title>${label} N=${n}: median ${formatMs(medianVal)}, p95 ${cell.p95Ns === null ? 'n/a' : formatMs(cell.p95Ns)}, match ${(cell.matchRate * 100).toFixed(1)}%</title></rect>`);
      if (cell.p95Ns !== null) {
        const cx = x + barW * 0.4;
        const yP95 = yOf(cell.p95Ns);
        out.push(`<line x1="${cx.toFixed(2)}" y1="${yMed.toFixed(2)}" x2="${cx.toFixed(2)}" y2="${yP95.toFixed(2)}" stroke="#333" stroke-width="1.5"/>`);
        out.push(`<line x1="${(cx - 5).toFixed(2)}" y1="${yP95.toFixed(2)}" x2="${(cx + 5).toFixed(2)}" y2="${yP95.toFixed(2)}" stroke="#333" stroke-width="1.5"/>`);
      }
    });
  });

  // legend
  labels.forEach((label, si) => {
    const x = MARGIN.left + si * 110;
    const color = PALETTE[si % PALETTE.length];
    out.push(`<rect x="${x}" y="34" width="12" height="12" fill="${color}"/>`);
    out.push(`<text x="${x + 17}" y="44" font-size="12" fill="#222">${label}</text>`);
  });

  out.push('</svg>');
  return out.join('\n') + '\n';
}
