// 2D canvas rendering of footprint polygons.  Everything is drawn from the
// server-confirmed scene dict; there is no retained client geometry.

import { footprintCorners, viewTransform } from "./geometry";
import type { SceneDict } from "./types";

/** The slice of CanvasRenderingContext2D the renderer uses; tests drive it
 * with a recording stub. */
export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: CanvasTextAlign;
  textBaseline: CanvasTextBaseline;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

export const WORKSPACE_FILL = "#f7f3ec";
export const WORKSPACE_EDGE = "#b9ac98";
export const OBJECT_STROKE = "#3d3a34";
export const SELECT_STROKE = "#d9480f";
export const SUPPORT_FILL = "#ded7c9";
export const LABEL_COLOR = "#2b2822";

const PALETTE = [
  "#74a4bc",
  "#b6c89f",
  "#e3b587",
  "#c3a6cb",
  "#8fc1b5",
  "#d6a5a4",
  "#a8b8d0",
  "#cbbd93",
];

export function categoryColor(category: string, isSupport: boolean): string {
  if (isSupport) return SUPPORT_FILL;
  let h = 0;
  for (let i = 0; i < category.length; i++) {
    h = (h * 31 + category.charCodeAt(i)) >>> 0;
  }
  return PALETTE[h % PALETTE.length];
}

export function drawScene(
  ctx: Draw2D,
  canvasW: number,
  canvasH: number,
  scene: SceneDict,
  selected: number | null,
): void {
  const view = viewTransform(scene.workspace, canvasW, canvasH);
  ctx.clearRect(0, 0, canvasW, canvasH);

  const [left, top] = view.toCanvas([0, scene.workspace.depth_m]);
  const w = scene.workspace.width_m * view.scale;
  const h = scene.workspace.depth_m * view.scale;
  ctx.fillStyle = WORKSPACE_FILL;
  ctx.fillRect(left, top, w, h);
  ctx.strokeStyle = WORKSPACE_EDGE;
  ctx.lineWidth = 2;
  ctx.strokeRect(left, top, w, h);

  // supports first so stacked objects draw on top of their tray
  const order = [...scene.objects].sort(
    (a, b) => Number(b.is_support) - Number(a.is_support) || a.id - b.id,
  );
  ctx.font = "12px system-ui, sans-serif";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  for (const obj of order) {
    const corners = footprintCorners(obj.pose, obj.half_extents).map(view.toCanvas);
    ctx.beginPath();
    ctx.moveTo(corners[0][0], corners[0][1]);
    for (let i = 1; i < corners.length; i++) {
      ctx.lineTo(corners[i][0], corners[i][1]);
    }
    ctx.closePath();
    ctx.fillStyle = categoryColor(obj.category, obj.is_support);
    ctx.fill();
    ctx.strokeStyle = obj.id === selected ? SELECT_STROKE : OBJECT_STROKE;
    ctx.lineWidth = obj.id === selected ? 3 : 1;
    ctx.stroke();

    // short tick from the centroid along the object +x axis shows heading
    const [cx, cy, theta] = obj.pose;
    const rad = (theta * Math.PI) / 180;
    const tip = view.toCanvas([
      cx + 0.8 * obj.half_extents[0] * Math.cos(rad),
      cy + 0.8 * obj.half_extents[0] * Math.sin(rad),
    ]);
    const center = view.toCanvas([cx, cy]);
    ctx.beginPath();
    ctx.moveTo(center[0], center[1]);
    ctx.lineTo(tip[0], tip[1]);
    ctx.stroke();

    ctx.fillStyle = LABEL_COLOR;
    ctx.fillText(obj.category, center[0], center[1] - 10);
  }
}
