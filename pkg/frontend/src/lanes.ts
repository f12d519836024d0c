/**
 * Canvas rendering of stacked per-sensor residual lanes plus the aggregated
 * score lane. Series are decimated to pixel columns; fault-interval shading
 * comes from the label column when present. Rendering only; every number is
 * service-provided.
 */

import { decimate } from "./decimate.js";
import type { ResidualKind, ScoresResponse } from "./types.js";
import { RESIDUAL_KINDS } from "./types.js";

const KIND_COLORS: Record<ResidualKind, string> = {
  r_trans: "#d9480f",
  r_bound: "#1864ab",
  r_conf: "#2b8a3e",
};

const LANE_HEIGHT = 90;
const GAP = 14;
const LEFT = 56;

export interface LaneLayout {
  /** lane label in draw order: aggregated first, then one lane per sensor */
  names: string[];
  height: number;
}

export function laneLayout(scores: ScoresResponse): LaneLayout {
  const names = ["aggregated", ...Object.keys(scores.per_sensor)];
  return { names, height: names.length * (LANE_HEIGHT + GAP) + GAP };
}

export function renderLanes(
  canvas: HTMLCanvasElement,
  scores: ScoresResponse,
  toggles: Record<ResidualKind, boolean>,
  selected: number | null,
  onLaneValueRange?: (name: string, lo: number, hi: number) => void,
): void {
  const layout = laneLayout(scores);
  const width = canvas.clientWidth || 900;
  canvas.width = width;
  canvas.height = layout.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const plotWidth = width - LEFT - 8;
  const columns = Math.max(32, Math.floor(plotWidth));
  const n = scores.aggregated.length;

  let top = GAP;
  for (const name of layout.names) {
    drawLaneFrame(ctx, name, top, width);
    drawFaultShading(ctx, scores.labels, n, top, plotWidth);
    if (name === "aggregated") {
      drawSeries(ctx, scores.aggregated, "#343a40", top, plotWidth, columns, onLaneValueRange, name);
    } else {
      const kinds = scores.per_sensor[name];
      for (const kind of RESIDUAL_KINDS) {
        if (!toggles[kind]) continue;
        drawSeries(ctx, kinds[kind], KIND_COLORS[kind], top, plotWidth, columns);
      }
    }
    if (selected !== null && n > 1) {
      const x = LEFT + ((selected - scores.from) / (scores.to - scores.from)) * plotWidth;
      ctx.strokeStyle = "#9c36b5";
      ctx.beginPath();
      ctx.moveTo(x, top);
      ctx.lineTo(x, top + LANE_HEIGHT);
      ctx.stroke();
    }
    top += LANE_HEIGHT + GAP;
  }
}

function drawLaneFrame(
  ctx: CanvasRenderingContext2D,
  name: string,
  top: number,
  width: number,
): void {
  ctx.fillStyle = "#f8f9fa";
  ctx.fillRect(LEFT, top, width - LEFT - 8, LANE_HEIGHT);
  ctx.strokeStyle = "#dee2e6";
  ctx.strokeRect(LEFT, top, width - LEFT - 8, LANE_HEIGHT);
  ctx.fillStyle = "#495057";
  ctx.font = "12px system-ui";
  ctx.save();
  ctx.translate(14, top + LANE_HEIGHT / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.textAlign = "center";
  ctx.fillText(name, 0, 0);
  ctx.restore();
}

function drawFaultShading(
  ctx: CanvasRenderingContext2D,
  labels: number[] | null,
  n: number,
  top: number,
  plotWidth: number,
): void {
  if (!labels || n < 2) return;
  const cell = plotWidth / n;
  ctx.fillStyle = "rgba(224, 49, 49, 0.10)";
  let runStart = -1;
  for (let i = 0; i <= n; i++) {
    const isFault = i < n && labels[i] === 1;
    if (isFault && runStart < 0) runStart = i;
    if (!isFault && runStart >= 0) {
      ctx.fillRect(LEFT + runStart * cell, top, (i - runStart) * cell, LANE_HEIGHT);
      runStart = -1;
    }
  }
}

function drawSeries(
  ctx: CanvasRenderingContext2D,
  values: number[],
  color: string,
  top: number,
  plotWidth: number,
  columns: number,
  onRange?: (name: string, lo: number, hi: number) => void,
  name?: string,
): void {
  if (values.length === 0) return;
  const reduced = decimate(values, columns);
  let lo = Infinity;
  let hi = -Infinity;
  for (let i = 0; i < reduced.min.length; i++) {
    if (reduced.min[i] < lo) lo = reduced.min[i];
    if (reduced.max[i] > hi) hi = reduced.max[i];
  }
  if (!(hi > lo)) hi = lo + 1;
  if (onRange && name) onRange(name, lo, hi);
  const n = values.length;
  const toX = (idx: number) => LEFT + (idx / Math.max(n - 1, 1)) * plotWidth;
  const toY = (v: number) =>
    top + LANE_HEIGHT - ((v - lo) / (hi - lo)) * (LANE_HEIGHT - 6) - 3;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1;
  ctx.beginPath();
  for (let i = 0; i < reduced.x.length; i++) {
    const x = toX(reduced.x[i]);
    ctx.moveTo(x, toY(reduced.min[i]));
    ctx.lineTo(x, toY(reduced.max[i]) - 0.5);
  }
  ctx.stroke();
}
