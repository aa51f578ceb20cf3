/**
 * Minimal deterministic SVG plotting: fixed canvas, fixed styles, numbers
 * formatted with fixed precision, no timestamps or random ids anywhere, so
 * identical inputs produce byte-identical files.
 */

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { left: 72, right: 176, top: 40, bottom: 56 };

export const SERIES_COLORS = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#ff7f0e",
  "#9467bd",
  "#8c564b",
  "#17becf",
  "#e377c2",
];

export function fmt(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`cannot format non-finite coordinate ${x}`);
  }
  return x.toFixed(2);
}

export interface Scale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  const scale = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  return scale;
}

export function ticks(domain: [number, number], count: number): number[] {
  const [lo, hi] = domain;
  if (lo === hi) return [lo];
  const step = (hi - lo) / (count - 1);
  return Array.from({ length: count }, (_, i) => lo + i * step);
}

export interface Polyline {
  label: string;
  color: string;
  dashed?: boolean;
  points: Array<[number, number]>; // already in pixel coordinates
  cssClass?: string;
}

export interface PanelSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xScale: Scale;
  yScale: Scale;
  xTickFormat: (v: number) => string;
  yTickFormat: (v: number) => string;
  lines: Polyline[];
}

function axisElements(spec: PanelSpec): string[] {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(
    `<line x1="${fmt(x0)}" y1="${fmt(y0)}" x2="${fmt(x1)}" y2="${fmt(y0)}" stroke="#000" stroke-width="1"/>`,
  );
  parts.push(
    `<line x1="${fmt(x0)}" y1="${fmt(y0)}" x2="${fmt(x0)}" y2="${fmt(y1)}" stroke="#000" stroke-width="1"/>`,
  );
  for (const v of ticks(spec.xScale.domain, 6)) {
    const px = spec.xScale(v);
    parts.push(
      `<line x1="${fmt(px)}" y1="${fmt(y0)}" x2="${fmt(px)}" y2="${fmt(y0 + 5)}" stroke="#000" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${fmt(px)}" y="${fmt(y0 + 20)}" text-anchor="middle" font-size="12">${spec.xTickFormat(v)}</text>`,
    );
  }
  for (const v of ticks(spec.yScale.domain, 6)) {
    const py = spec.yScale(v);
    parts.push(
      `<line x1="${fmt(x0 - 5)}" y1="${fmt(py)}" x2="${fmt(x0)}" y2="${fmt(py)}" stroke="#000" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${fmt(x0 - 9)}" y="${fmt(py + 4)}" text-anchor="end" font-size="12">${spec.yTickFormat(v)}</text>`,
    );
  }
  parts.push(
    `<text x="${fmt((x0 + x1) / 2)}" y="${fmt(HEIGHT - 14)}" text-anchor="middle" font-size="14">${spec.xLabel}</text>`,
  );
  parts.push(
    `<text x="20" y="${fmt((y0 + y1) / 2)}" text-anchor="middle" font-size="14" transform="rotate(-90 20 ${fmt(
      (y0 + y1) / 2,
    )})">${spec.yLabel}</text>`,
  );
  parts.push(
    `<text x="${fmt((x0 + x1) / 2)}" y="24" text-anchor="middle" font-size="16">${spec.title}</text>`,
  );
  return parts;
}

function lineElements(spec: PanelSpec): string[] {
  const parts: string[] = [];
  spec.lines.forEach((line, idx) => {
    const pts = line.points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    const dash = line.dashed ? ' stroke-dasharray="6,4"' : "";
    const cls = line.cssClass ? ` class="${line.cssClass}"` : "";
    parts.push(
      `<polyline${cls} fill="none" stroke="${line.color}" stroke-width="1.5"${dash} points="${pts}"/>`,
    );
    const ly = MARGIN.top + 16 * idx;
    const lx = WIDTH - MARGIN.right + 12;
    parts.push(
      `<line x1="${fmt(lx)}" y1="${fmt(ly)}" x2="${fmt(lx + 22)}" y2="${fmt(ly)}" stroke="${line.color}" stroke-width="1.5"${dash}/>`,
    );
    parts.push(
      `<text x="${fmt(lx + 28)}" y="${fmt(ly + 4)}" font-size="11">${line.label}</text>`,
    );
  });
  return parts;
}

export function renderSvg(spec: PanelSpec): string {
  const body = [...axisElements(spec), ...lineElements(spec)].join("\n  ");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
    `  <rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>\n` +
    `  ${body}\n` +
    `</svg>\n`
  );
}
