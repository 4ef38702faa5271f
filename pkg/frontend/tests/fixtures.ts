import type { SceneDict } from "../src/types";

/** Three objects, mug stacked on the tray, matching the service's scene
 * dict shape. */
export function demoScene(): SceneDict {
  return {
    workspace: { width_m: 1.0, depth_m: 0.7, grid_h: 16, grid_w: 16, rotation_bins: 4 },
    environment_tag: "office",
    objects: [
      { id: 1, category: "book", half_extents: [0.1, 0.07], pose: [0.3, 0.3, 0], is_support: false },
      { id: 2, category: "mug", half_extents: [0.04, 0.04], pose: [0.62, 0.42, 0], is_support: false },
      { id: 7, category: "tray", half_extents: [0.15, 0.1], pose: [0.62, 0.42, 0], is_support: true },
    ],
  };
}
