/**
 * SVG learning-curve figure: one panel per rollout count, one line per
 * (variant, check) pair with a +-1 std band across seeds.
 *
 * The output is deterministic for fixed input: groups are sorted, colors
 * are assigned by sorted series key, and numbers are fixed-precision.
 */

import { Curve } from './csv.js';

const PANEL_WIDTH = 420;
const PANEL_HEIGHT = 300;
const MARGIN = { top: 36, right: 16, bottom: 44, left: 56 };
const PALETTE = [
  '#1b6ca8',
  '#d1495b',
  '#66a182',
  '#edae49',
  '#7d5ba6',
  '#2e4057',
  '#8c8c8c',
  '#00798c',
];

function fmt(x: number): string {
  return Number(x.toFixed(3)).toString();
}

interface Scale {
  (x: number): number;
}

function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (x: number) => r0 + ((x - d0) / span) * (r1 - r0);
}

function ticks(lo: number, hi: number, count: number): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const unit = err >= 7.5 ? step * 10 : err >= 3.5 ? step * 5 : err >= 1.5 ? step * 2 : step;
  const out: number[] = [];
  for (let v = Math.ceil(lo / unit) * unit; v <= hi + 1e-9; v += unit) {
    out.push(Number(v.toFixed(10)));
  }
  return out;
}

export interface FigureOptions {
  vstar?: number;
  title?: string;
}

export function renderFigure(curves: Curve[], options: FigureOptions = {}): string {
  if (curves.length === 0) {
    throw new Error('no curves to draw');
  }
  const panels = [...new Set(curves.map((c) => c.n))].sort((a, b) => a - b);
  const seriesKeys = [...new Set(curves.map((c) => `${c.variant}:${c.check}`))].sort();
  const color = new Map(seriesKeys.map((k, i) => [k, PALETTE[i % PALETTE.length]]));

  let lo = Infinity;
  let hi = -Infinity;
  for (const c of curves) {
    for (let i = 0; i < c.mean.length; i++) {
      lo = Math.min(lo, c.mean[i] - c.band[i]);
      hi = Math.max(hi, c.mean[i] + c.band[i]);
    }
  }
  if (options.vstar !== undefined) {
    lo = Math.min(lo, options.vstar);
    hi = Math.max(hi, options.vstar);
  }
  const pad = 0.05 * (hi - lo || 1);
  lo -= pad;
  hi += pad;

  const width = MARGIN.left + panels.length * (PANEL_WIDTH + MARGIN.right);
  const height = MARGIN.top + PANEL_HEIGHT + MARGIN.bottom + 18 * Math.ceil(seriesKeys.length / 3);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  if (options.title) {
    parts.push(
      `<text x="${width / 2}" y="18" text-anchor="middle" font-size="14">${options.title}</text>`,
    );
  }

  panels.forEach((n, panelIndex) => {
    const x0 = MARGIN.left + panelIndex * (PANEL_WIDTH + MARGIN.right);
    const y0 = MARGIN.top;
    const panelCurves = curves.filter((c) => c.n === n);
    const kMax = Math.max(...panelCurves.map((c) => c.iterations[c.iterations.length - 1]));
    const sx = linearScale(1, kMax, x0, x0 + PANEL_WIDTH);
    const sy = linearScale(lo, hi, y0 + PANEL_HEIGHT, y0);

    parts.push(`<g class="panel" data-n="${n}">`);
    parts.push(
      `<rect x="${x0}" y="${y0}" width="${PANEL_WIDTH}" height="${PANEL_HEIGHT}" ` +
        `fill="none" stroke="#333" stroke-width="1"/>`,
    );
    for (const t of ticks(lo, hi, 6)) {
      const y = sy(t);
      parts.push(
        `<line x1="${x0}" y1="${fmt(y)}" x2="${x0 + PANEL_WIDTH}" y2="${fmt(y)}" ` +
          `stroke="#ddd" stroke-width="0.5"/>`,
      );
      parts.push(
        `<text x="${x0 - 6}" y="${fmt(y + 3)}" text-anchor="end" font-size="10">${t}</text>`,
      );
    }
    for (const t of ticks(1, kMax, 8)) {
      const x = sx(t);
      parts.push(
        `<text x="${fmt(x)}" y="${y0 + PANEL_HEIGHT + 14}" text-anchor="middle" ` +
          `font-size="10">${t}</text>`,
      );
    }
    parts.push(
      `<text x="${x0 + PANEL_WIDTH / 2}" y="${y0 + PANEL_HEIGHT + 32}" ` +
        `text-anchor="middle" font-size="11">iteration (n = ${n} rollouts)</text>`,
    );
    if (panelIndex === 0) {
      parts.push(
        `<text x="${x0 - 40}" y="${y0 + PANEL_HEIGHT / 2}" font-size="11" ` +
          `transform="rotate(-90 ${x0 - 40} ${y0 + PANEL_HEIGHT / 2})" ` +
          `text-anchor="middle">policy value at the start state</text>`,
      );
    }
    if (options.vstar !== undefined) {
      const y = fmt(sy(options.vstar));
      parts.push(
        `<line class="vstar" x1="${x0}" y1="${y}" x2="${x0 + PANEL_WIDTH}" y2="${y}" ` +
          `stroke="#111" stroke-width="1" stroke-dasharray="5,3"/>`,
      );
    }

    for (const curve of panelCurves) {
      const key = `${curve.variant}:${curve.check}`;
      const stroke = color.get(key)!;
      if (curve.seeds > 1) {
        const upper = curve.iterations.map(
          (k, i) => `${fmt(sx(k))},${fmt(sy(curve.mean[i] + curve.band[i]))}`,
        );
        const lower = curve.iterations
          .map((k, i) => `${fmt(sx(k))},${fmt(sy(curve.mean[i] - curve.band[i]))}`)
          .reverse();
        parts.push(
          `<polygon class="band" data-series="${key}" points="${upper.join(' ')} ` +
            `${lower.join(' ')}" fill="${stroke}" opacity="0.15" stroke="none"/>`,
        );
      }
      const line = curve.iterations
        .map((k, i) => `${fmt(sx(k))},${fmt(sy(curve.mean[i]))}`)
        .join(' ');
      parts.push(
        `<polyline class="curve" data-series="${key}" points="${line}" ` +
          `fill="none" stroke="${stroke}" stroke-width="1.8"/>`,
      );
    }
    parts.push('</g>');
  });

  seriesKeys.forEach((key, i) => {
    const x = MARGIN.left + (i % 3) * 180;
    const y = MARGIN.top + PANEL_HEIGHT + 52 + Math.floor(i / 3) * 18;
    parts.push(
      `<g class="legend-entry" data-series="${key}">` +
        `<line x1="${x}" y1="${y - 4}" x2="${x + 22}" y2="${y - 4}" ` +
        `stroke="${color.get(key)}" stroke-width="2"/>` +
        `<text x="${x + 28}" y="${y}" font-size="11">${key}</text></g>`,
    );
  });

  parts.push('</svg>');
  return parts.join('\n');
}
