/** Rolling line charts for the session: smoothed hinge-loss proxy and
 * cumulative corrections, drawn through the same Draw2D interface. */

import { Draw2D } from "./render.js";

export function movingAverage(values: number[], window: number): number[] {
  if (window < 1) throw new Error("window must be >= 1");
  const out: number[] = [];
  let sum = 0;
  for (let i = 0; i < values.length; i++) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out.push(sum / Math.min(i + 1, window));
  }
  return out;
}

export interface ChartArea {
  x: number;
  y: number;
  width: number;
  height: number;
}

export function renderSeries(
  draw: Draw2D,
  area: ChartArea,
  values: number[],
  stroke: string,
  label: string,
): void {
  draw.rect(area.x, area.y, area.width, area.height, "#fafafa");
  draw.text(area.x + 4, area.y + 12, label, "#455a64");
  if (values.length < 2) return;
  const max = Math.max(...values, 1e-9);
  const min = Math.min(...values, 0);
  const span = max - min || 1;
  const points: [number, number][] = values.map((v, i) => [
    area.x + (i / (values.length - 1)) * area.width,
    area.y + area.height - ((v - min) / span) * (area.height - 16),
  ]);
  draw.polyline(points, stroke, 1.5);
  draw.text(area.x + area.width - 48, area.y + 12, max.toFixed(2), "#455a64");
}
