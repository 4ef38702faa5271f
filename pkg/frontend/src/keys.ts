import type { EditOp } from "./types";

export type KeyOp = Exclude<EditOp, "select">;

// One posted event per keydown: arrows move 1 cm, brackets rotate 10
// degrees.  Auto-repeat ticks are separate keydowns and count as separate
// edits, so callers must not filter on event.repeat.
export const KEY_OPS: Record<string, KeyOp> = {
  ArrowUp: "move-up",
  ArrowDown: "move-down",
  ArrowLeft: "move-left",
  ArrowRight: "move-right",
  "[": "rotate-ccw",
  "]": "rotate-cw",
};

export function opForKey(key: string): KeyOp | null {
  return KEY_OPS[key] ?? null;
}
