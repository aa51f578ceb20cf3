import { mkdirSync, readFileSync, writeFileSync } from "fs";
import { dirname } from "path";
import { z } from "zod";

import { readLandscapeCsv, readSweepCsv } from "./csv.js";
import { landscapePanel, varianceVsNPanel, varianceVsTPanel } from "./panels.js";
import { PanelSpec, renderSvg } from "./svg.js";

export const figureSpecSchema = z
  .object({
    inputs: z.array(z.string()).min(1),
    panel: z.enum(["landscape_panel", "variance_vs_t", "variance_vs_n"]),
    log2_y: z.boolean().optional(),
    output: z.string(),
  })
  .strict();

export type FigureSpec = z.infer<typeof figureSpecSchema>;

export function loadFigureSpec(path: string): FigureSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`cannot read figure spec ${path}: ${(err as Error).message}`);
  }
  const result = figureSpecSchema.safeParse(raw);
  if (!result.success) {
    const issue = result.error.issues[0];
    throw new Error(`${path}: invalid figure spec: ${issue.path.join(".")}: ${issue.message}`);
  }
  return result.data;
}

function buildPanel(spec: FigureSpec): PanelSpec {
  // variance panels default to a log2 y-axis so the 2^(-2n) law reads as slope -2
  const log2Y = spec.log2_y ?? spec.panel !== "landscape_panel";
  if (spec.panel === "landscape_panel") {
    const rows = spec.inputs.flatMap(readLandscapeCsv);
    return landscapePanel(rows);
  }
  const rows = spec.inputs.flatMap(readSweepCsv);
  if (spec.panel === "variance_vs_t") {
    return varianceVsTPanel(rows, { log2Y });
  }
  return varianceVsNPanel(rows, { log2Y });
}

/** Render the figure and return the SVG text that was written. */
export function render(spec: FigureSpec): string {
  const svg = renderSvg(buildPanel(spec));
  mkdirSync(dirname(spec.output) || ".", { recursive: true });
  writeFileSync(spec.output, svg, "utf-8");
  return svg;
}
