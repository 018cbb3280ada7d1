/**
 * Three-panel trajectory figures.
 *
 * One figure stacks the sigma_x / sigma_y / sigma_z panels of a CSV
 * bundle, overlaying every case with its declared line style, and marks
 * the envelope of decaying oscillations on the two coherence panels for
 * the cases that ask for it.  Output is a self-contained SVG string; the
 * caller decides where it lands.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { CaseSeries, parseTrajectoryCsv, TrajectoryPoint } from "./csv.js";
import { localExtremaEnvelope } from "./envelope.js";

export interface CaseStyle {
  /** stroke-dasharray, or null for a solid line */
  dash: string | null;
  color: string;
  /** mark +-|envelope| on the coherence panels */
  envelope: boolean;
}

export interface FigureSpec {
  csvPaths: string[];
  outputPath: string;
  styles: Record<string, CaseStyle>;
  /** time window; defaults to the data range */
  tRange?: [number, number];
  title?: string;
}

/** Styles for the bundled scenario presets: dashed, dotted, dash-dotted,
 * solid in case order, envelopes on the two damped cases. */
export const DEFAULT_STYLES: Record<string, CaseStyle> = {
  isolated: { dash: "9,5", color: "#555555", envelope: false },
  driven: { dash: "2,4", color: "#1f77b4", envelope: false },
  damped: { dash: "9,4,2,4", color: "#d62728", envelope: true },
  driven_damped: { dash: null, color: "#2ca02c", envelope: true },
  cdt_drive: { dash: null, color: "#1f77b4", envelope: false },
};

type PanelKey = "sigma_x" | "sigma_y" | "sigma_z";

const PANELS: { key: PanelKey; label: string; pick: (p: TrajectoryPoint) => number }[] = [
  { key: "sigma_x", label: "σ_x", pick: (p) => p.sx },
  { key: "sigma_y", label: "σ_y", pick: (p) => p.sy },
  { key: "sigma_z", label: "σ_z", pick: (p) => p.sz },
];

// envelopes belong to the coherence panels only
const ENVELOPE_PANELS: PanelKey[] = ["sigma_x", "sigma_y"];

const W = 780;
const PANEL_H = 190;
const ML = 64;
const MR = 18;
const MT = 54;
const PANEL_GAP = 26;
const MB = 46;

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((n) => n >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 0.01; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function fmtTick(v: number): string {
  return Math.abs(v - Math.round(v)) < 1e-9 ? String(Math.round(v)) : v.toPrecision(3);
}

function loadSeries(spec: FigureSpec): CaseSeries {
  if (spec.csvPaths.length === 0) {
    throw new Error("figure spec lists no input CSVs");
  }
  const merged: CaseSeries = new Map();
  for (const path of spec.csvPaths) {
    const series = parseTrajectoryCsv(readFileSync(path, "utf-8"), path);
    for (const [label, points] of series) {
      if (merged.has(label)) {
        throw new Error(`case label '${label}' appears in more than one input CSV`);
      }
      merged.set(label, points);
    }
  }
  for (const label of merged.keys()) {
    if (!(label in spec.styles)) {
      throw new Error(`no style declared for case label '${label}'`);
    }
  }
  return merged;
}

function pathFrom(points: Array<[number, number]>): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`)
    .join("");
}

/** Render the figure and write it to spec.outputPath; returns the SVG text. */
export function render(spec: FigureSpec): string {
  const series = loadSeries(spec);
  const labels = [...series.keys()];

  let tMin = Infinity;
  let tMax = -Infinity;
  for (const points of series.values()) {
    for (const p of points) {
      if (p.t < tMin) tMin = p.t;
      if (p.t > tMax) tMax = p.t;
    }
  }
  if (spec.tRange) [tMin, tMax] = spec.tRange;
  if (!(tMax > tMin)) {
    throw new Error(`degenerate time range [${tMin}, ${tMax}]`);
  }

  const H = MT + PANELS.length * PANEL_H + (PANELS.length - 1) * PANEL_GAP + MB;
  const pw = W - ML - MR;
  const xOf = (t: number) => ML + ((t - tMin) / (tMax - tMin)) * pw;

  let s = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${W}" height="${H}" fill="#ffffff"/>\n`;
  if (spec.title) {
    s += `<text x="${ML}" y="18" font-size="13" font-weight="600" fill="#222">${esc(spec.title)}</text>\n`;
  }

  // legend: one styled sample line per case
  s += `<g class="legend">\n`;
  let lx = ML;
  const ly = 34;
  for (const label of labels) {
    const st = spec.styles[label];
    const dash = st.dash ? ` stroke-dasharray="${st.dash}"` : "";
    s += `<line x1="${lx}" y1="${ly}" x2="${lx + 26}" y2="${ly}" stroke="${st.color}" stroke-width="1.6"${dash}/>\n`;
    s += `<text x="${lx + 30}" y="${ly + 3.5}" font-size="10" fill="#333" class="legend-label">${esc(label)}</text>\n`;
    lx += 40 + 7.2 * label.length;
  }
  s += `</g>\n`;

  PANELS.forEach((panel, pi) => {
    const top = MT + pi * (PANEL_H + PANEL_GAP);
    const ph = PANEL_H;

    // y range: Bloch components live in [-1, 1]; widen only if exceeded
    let lo = -1.05;
    let hi = 1.05;
    for (const points of series.values()) {
      for (const p of points) {
        const v = panel.pick(p);
        if (v < lo) lo = v * 1.05;
        if (v > hi) hi = v * 1.05;
      }
    }
    const yOf = (v: number) => top + ph - ((v - lo) / (hi - lo)) * ph;

    s += `<g class="panel" id="panel-${panel.key}">\n`;
    s += `<rect x="${ML}" y="${top}" width="${pw}" height="${ph}" fill="none" stroke="#999" stroke-width="0.8"/>\n`;
    for (const v of niceTicks(lo, hi, 4)) {
      const y = yOf(v);
      s += `<line x1="${ML}" y1="${y.toFixed(1)}" x2="${ML + pw}" y2="${y.toFixed(1)}" stroke="#eee" stroke-width="0.6"/>\n`;
      s += `<text x="${ML - 6}" y="${(y + 3).toFixed(1)}" font-size="9" fill="#555" text-anchor="end">${fmtTick(v)}</text>\n`;
    }
    for (const t of niceTicks(tMin, tMax, 8)) {
      const x = xOf(t);
      s += `<line x1="${x.toFixed(1)}" y1="${top}" x2="${x.toFixed(1)}" y2="${top + ph}" stroke="#f3f3f3" stroke-width="0.6"/>\n`;
      if (pi === PANELS.length - 1) {
        s += `<text x="${x.toFixed(1)}" y="${top + ph + 14}" font-size="9" fill="#555" text-anchor="middle">${fmtTick(t)}</text>\n`;
      }
    }
    s += `<text x="${ML - 40}" y="${top + ph / 2}" font-size="12" fill="#222" transform="rotate(-90 ${ML - 40} ${top + ph / 2})" text-anchor="middle">${panel.label}</text>\n`;

    for (const label of labels) {
      const st = spec.styles[label];
      const pts = series
        .get(label)!
        .filter((p) => p.t >= tMin - 1e-12 && p.t <= tMax + 1e-12)
        .map((p): [number, number] => [xOf(p.t), yOf(panel.pick(p))]);
      const dash = st.dash ? ` stroke-dasharray="${st.dash}"` : "";
      s += `<path class="curve" data-case="${esc(label)}" d="${pathFrom(pts)}" fill="none" stroke="${st.color}" stroke-width="1.1"${dash}/>\n`;
    }

    if (ENVELOPE_PANELS.includes(panel.key)) {
      for (const label of labels) {
        const st = spec.styles[label];
        if (!st.envelope) continue;
        const points = series
          .get(label)!
          .filter((p) => p.t >= tMin - 1e-12 && p.t <= tMax + 1e-12);
        const nodes = localExtremaEnvelope(
          points.map((p) => p.t),
          points.map((p) => panel.pick(p))
        );
        if (nodes.length < 2) continue;
        for (const sign of [1, -1]) {
          const pts = nodes.map((n): [number, number] => [xOf(n.t), yOf(sign * n.value)]);
          s += `<path class="envelope" data-case="${esc(label)}" d="${pathFrom(pts)}" fill="none" stroke="${st.color}" stroke-width="0.9" opacity="0.75"/>\n`;
        }
      }
    }
    s += `</g>\n`;
  });

  s += `<text x="${ML + pw / 2}" y="${H - 12}" font-size="12" fill="#222" text-anchor="middle">Δ₀ t</text>\n`;
  s += `</svg>\n`;

  writeFileSync(spec.outputPath, s);
  return s;
}
