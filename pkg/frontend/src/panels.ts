import { LandscapeRow, SweepRow } from "./csv.js";
import {
  HEIGHT,
  MARGIN,
  PanelSpec,
  Polyline,
  SERIES_COLORS,
  WIDTH,
  linearScale,
} from "./svg.js";

const PLOT_X: [number, number] = [MARGIN.left, WIDTH - MARGIN.right];
const PLOT_Y: [number, number] = [HEIGHT - MARGIN.bottom, MARGIN.top];

const LOG2_FLOOR = 1e-300;

function log2(v: number): number {
  if (v <= 0) {
    throw new Error(`log-scale panel requires positive values, got ${v}`);
  }
  return Math.log2(Math.max(v, LOG2_FLOOR));
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

function pad([lo, hi]: [number, number], frac = 0.06): [number, number] {
  const w = (hi - lo) * frac;
  return [lo - w, hi + w];
}

function groupBy<T>(rows: T[], key: (row: T) => string): Map<string, T[]> {
  const out = new Map<string, T[]>();
  for (const row of rows) {
    const k = key(row);
    const bucket = out.get(k);
    if (bucket) bucket.push(row);
    else out.set(k, [row]);
  }
  return out;
}

function fmtNum(v: number): string {
  return Number.isInteger(v) ? String(v) : String(Number(v.toPrecision(4)));
}

/** Cost along the random cut, one curve per (n, g, t) series. */
export function landscapePanel(rows: LandscapeRow[]): PanelSpec {
  const xScale = linearScale(pad(extent(rows.map((r) => r.epsilon))), PLOT_X);
  const yScale = linearScale(pad(extent(rows.map((r) => r.cost_value))), PLOT_Y);
  const series = groupBy(rows, (r) => `n=${fmtNum(r.n)} g=${fmtNum(r.g)} t=${fmtNum(r.t)}`);
  const lines: Polyline[] = [...series.entries()].map(([label, pts], i) => ({
    label,
    color: SERIES_COLORS[i % SERIES_COLORS.length],
    points: pts
      .slice()
      .sort((a, b) => a.epsilon - b.epsilon)
      .map((r) => [xScale(r.epsilon), yScale(r.cost_value)] as [number, number]),
  }));
  return {
    title: "Cost along a random cut",
    xLabel: "epsilon",
    yLabel: "cost",
    xScale,
    yScale,
    xTickFormat: (v) => v.toFixed(2),
    yTickFormat: (v) => v.toFixed(2),
    lines,
  };
}

interface VarianceOptions {
  log2Y: boolean;
}

function variancePanel(
  rows: SweepRow[],
  xKey: "t" | "n",
  seriesKey: (r: SweepRow) => string,
  opts: VarianceOptions,
  extraY: number[] = [],
): PanelSpec {
  const yRaw = rows.map((r) => (opts.log2Y ? log2(r.value) : r.value)).concat(extraY);
  const xScale = linearScale(pad(extent(rows.map((r) => r[xKey]))), PLOT_X);
  const yScale = linearScale(pad(extent(yRaw)), PLOT_Y);
  const series = groupBy(rows, seriesKey);
  const lines: Polyline[] = [...series.entries()].map(([label, pts], i) => ({
    label,
    color: SERIES_COLORS[i % SERIES_COLORS.length],
    points: pts
      .slice()
      .sort((a, b) => a[xKey] - b[xKey])
      .map(
        (r) =>
          [xScale(r[xKey]), yScale(opts.log2Y ? log2(r.value) : r.value)] as [number, number],
      ),
  }));
  return {
    title: `Gradient variance vs ${xKey}`,
    xLabel: xKey,
    yLabel: opts.log2Y ? "log2 variance" : "variance",
    xScale,
    yScale,
    xTickFormat: (v) => fmtNum(Math.round(v * 100) / 100),
    yTickFormat: (v) => v.toFixed(1),
    lines,
  };
}

export function varianceVsTPanel(rows: SweepRow[], opts: VarianceOptions): PanelSpec {
  return variancePanel(rows, "t", (r) => `n=${fmtNum(r.n)} g=${fmtNum(r.g)} ${r.axis}`, opts);
}

/**
 * Variance against qubit count, with a dashed 2^(-2n) guide anchored at the
 * largest-n data point (the upstream law is a proportionality, so the guide
 * is pinned to data rather than to an absolute constant).
 */
export function varianceVsNPanel(rows: SweepRow[], opts: VarianceOptions): PanelSpec {
  const anchor = rows.reduce((best, r) => (r.n > best.n ? r : best), rows[0]);
  const [nLo, nHi] = extent(rows.map((r) => r.n));
  const guide = (n: number) =>
    opts.log2Y
      ? log2(anchor.value) - 2 * (n - anchor.n)
      : anchor.value * Math.pow(2, -2 * (n - anchor.n));
  const panel = variancePanel(
    rows,
    "n",
    (r) => `g=${fmtNum(r.g)} t=${fmtNum(r.t)} ${r.axis}`,
    opts,
    [guide(nLo), guide(nHi)],
  );
  panel.lines.push({
    label: "2^(-2n) guide",
    color: "#555555",
    dashed: true,
    cssClass: "guide",
    points: [
      [panel.xScale(nLo), panel.yScale(guide(nLo))],
      [panel.xScale(nHi), panel.yScale(guide(nHi))],
    ],
  });
  return panel;
}
