/**
 * Canvas rendering for the teaching view: occupancy grid, semantic markers,
 * reference path, robot pose, and candidate trajectory polylines.
 *
 * Drawing goes through a narrow Draw2D interface so tests can record the
 * draw calls without a real canvas.
 */

import { Candidate, MapSummary } from "./protocol.js";

export interface Draw2D {
  clear(): void;
  rect(x: number, y: number, w: number, h: number, fill: string): void;
  circle(x: number, y: number, r: number, fill: string): void;
  polyline(points: [number, number][], stroke: string, width: number, dashed?: boolean): void;
  text(x: number, y: number, s: string, fill: string): void;
}

export interface ViewTransform {
  scale: number; // pixels per meter
  height: number; // canvas pixel height (y axis flips)
}

export function worldToScreen(t: ViewTransform, x: number, y: number): [number, number] {
  return [x * t.scale, t.height - y * t.scale];
}

export const STYLE = {
  freeCell: "#ffffff",
  occupiedCell: "#37474f",
  path: "#b0bec5",
  door: "#e53935",
  stair: "#8e24aa",
  chair: "#f9a825",
  robot: "#1565c0",
  candidate: "#90caf9",
  blockedCandidate: "#cfd8dc",
  chosen: "#1b5e20",
  alternative: "#ef6c00",
  refPoint: "#00897b",
};

export function renderMap(draw: Draw2D, t: ViewTransform, map: MapSummary): void {
  draw.clear();
  const res = map.resolution;
  for (let j = 0; j < map.grid.length; j++) {
    const row = map.grid[j];
    for (let i = 0; i < row.length; i++) {
      if (row[i] === "#") {
        const [sx, sy] = worldToScreen(t, i * res, (j + 1) * res);
        draw.rect(sx, sy, res * t.scale, res * t.scale, STYLE.occupiedCell);
      }
    }
  }
  draw.polyline(
    map.path.map(([x, y]) => worldToScreen(t, x, y)),
    STYLE.path,
    1,
  );
  const markers: [number[][], string][] = [
    [map.doors, STYLE.door],
    [map.stairs, STYLE.stair],
    [map.chairs, STYLE.chair],
  ];
  for (const [points, color] of markers) {
    for (const [x, y] of points) {
      const [sx, sy] = worldToScreen(t, x, y);
      draw.circle(sx, sy, 4, color);
    }
  }
}

export interface ProposalView {
  pose: number[];
  refPoint: number[] | null;
  candidates: Candidate[];
  chosenIndex: number | null;
  preferenceAlternative: number | null;
}

/** Draw all candidates: chosen highlighted, blocked dashed, the preference
 * alternative in its own color. */
export function renderProposal(draw: Draw2D, t: ViewTransform, view: ProposalView): void {
  for (const c of view.candidates) {
    const pts = c.points.map(([x, y]) => worldToScreen(t, x, y));
    if (c.blocked) {
      draw.polyline(pts, STYLE.blockedCandidate, 1, true);
    } else if (c.index === view.chosenIndex) {
      draw.polyline(pts, STYLE.chosen, 3);
    } else if (c.index === view.preferenceAlternative) {
      draw.polyline(pts, STYLE.alternative, 2);
    } else {
      draw.polyline(pts, STYLE.candidate, 1);
    }
  }
  const [rx, ry] = worldToScreen(t, view.pose[0], view.pose[1]);
  draw.circle(rx, ry, 6, STYLE.robot);
  const heading = view.pose[2];
  const hx = view.pose[0] + 0.4 * Math.cos(heading);
  const hy = view.pose[1] + 0.4 * Math.sin(heading);
  draw.polyline([[rx, ry], worldToScreen(t, hx, hy)], STYLE.robot, 2);
  if (view.refPoint) {
    const [px, py] = worldToScreen(t, view.refPoint[0], view.refPoint[1]);
    draw.circle(px, py, 3, STYLE.refPoint);
  }
}

/** Pick the nearest non-blocked candidate to a screen click, within a
 * tolerance in pixels; returns its index or null. */
export function pickCandidate(
  t: ViewTransform,
  candidates: Candidate[],
  sx: number,
  sy: number,
  tolerancePx = 10,
): number | null {
  let best: number | null = null;
  let bestD = tolerancePx;
  for (const c of candidates) {
    if (c.blocked) continue;
    for (const [x, y] of c.points) {
      const [px, py] = worldToScreen(t, x, y);
      const d = Math.hypot(px - sx, py - sy);
      if (d < bestD) {
        bestD = d;
        best = c.index;
      }
    }
  }
  return best;
}
