// Wire types mirroring the session service JSON payloads.  The client
// renders and displays these verbatim; it never derives poses or totals
// on its own.

export interface WorkspaceDict {
  width_m: number;
  depth_m: number;
  grid_h: number;
  grid_w: number;
  rotation_bins: number;
}

export interface SceneObjectDict {
  id: number;
  category: string;
  half_extents: [number, number];
  pose: [number, number, number];
  is_support: boolean;
}

export interface SceneDict {
  workspace: WorkspaceDict;
  environment_tag: string;
  objects: SceneObjectDict[];
}

export interface Totals {
  distance_cm: number;
  rotation_deg: number;
  op_count: number;
}

export type EditOp =
  | "move-up"
  | "move-down"
  | "move-left"
  | "move-right"
  | "rotate-ccw"
  | "rotate-cw"
  | "select";

export interface SessionPayload {
  session_id: string;
  scene_id: string;
  scene: SceneDict;
  selected_object: number | null;
  totals: Totals;
  finished: boolean;
}

export interface TlxRatings {
  mental_demand: number;
  performance: number;
  frustration: number;
}

export interface FinishResponse {
  session_id: string;
  totals: Totals;
  tlx: TlxRatings;
  final_scene: SceneDict;
}

export interface MetricsResponse {
  session_id: string;
  scene_id: string;
  participant: string;
  totals: Totals;
  tlx: TlxRatings | null;
  finished: boolean;
}

export interface SceneListEntry {
  id: string;
  environment: string;
  scene: SceneDict;
}
