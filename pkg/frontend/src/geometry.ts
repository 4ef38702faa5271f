// Footprint math for rendering and click hit-testing.  Table coordinates
// put the origin at the workspace corner with +y away from the viewer, so
// the canvas transform flips y.

import type { SceneDict, WorkspaceDict } from "./types";

export type Point = [number, number];

/** Rectangle corners in table coordinates, counter-clockwise from the
 * object-frame (+x, +y) corner; theta is degrees counter-clockwise. */
export function footprintCorners(
  pose: [number, number, number],
  halfExtents: [number, number],
): Point[] {
  const [cx, cy, theta] = pose;
  const [hx, hy] = halfExtents;
  const rad = (theta * Math.PI) / 180;
  const c = Math.cos(rad);
  const s = Math.sin(rad);
  const local: Point[] = [
    [hx, hy],
    [-hx, hy],
    [-hx, -hy],
    [hx, -hy],
  ];
  return local.map(([px, py]) => [cx + c * px - s * py, cy + s * px + c * py]);
}

/** Convex-polygon containment with the boundary counting as inside. */
export function pointInFootprint(p: Point, corners: Point[]): boolean {
  let sign = 0;
  for (let i = 0; i < corners.length; i++) {
    const [ax, ay] = corners[i];
    const [bx, by] = corners[(i + 1) % corners.length];
    const cross = (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax);
    if (cross !== 0) {
      const side = Math.sign(cross);
      if (sign === 0) sign = side;
      else if (side !== sign) return false;
    }
  }
  return true;
}

/** Object id under a table-coordinate point, or null.  Overlaps happen
 * only for objects stacked on a support, so the smallest footprint wins
 * (the rider, not the tray underneath). */
export function hitTest(scene: SceneDict, p: Point): number | null {
  let best: number | null = null;
  let bestArea = Infinity;
  for (const o of scene.objects) {
    if (pointInFootprint(p, footprintCorners(o.pose, o.half_extents))) {
      const area = 4 * o.half_extents[0] * o.half_extents[1];
      if (area < bestArea) {
        bestArea = area;
        best = o.id;
      }
    }
  }
  return best;
}

export interface ViewTransform {
  /** pixels per meter */
  scale: number;
  toCanvas(p: Point): Point;
  toTable(p: Point): Point;
}

/** Fits the workspace rectangle into the canvas, centered, y flipped. */
export function viewTransform(
  ws: WorkspaceDict,
  canvasW: number,
  canvasH: number,
  margin = 20,
): ViewTransform {
  const scale = Math.min(
    (canvasW - 2 * margin) / ws.width_m,
    (canvasH - 2 * margin) / ws.depth_m,
  );
  const ox = (canvasW - scale * ws.width_m) / 2;
  const oy = (canvasH - scale * ws.depth_m) / 2;
  return {
    scale,
    toCanvas: ([x, y]) => [ox + x * scale, canvasH - oy - y * scale],
    toTable: ([px, py]) => [(px - ox) / scale, (canvasH - oy - py) / scale],
  };
}
