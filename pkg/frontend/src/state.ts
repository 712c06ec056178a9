/** ViewState and the action log.
 *
 * The UI is a pure function of (scene, ViewState); every interaction is an
 * Action, so a recorded log replays to the same final state. Actions never
 * mutate the scene or the previous state.
 */

import {
  ClusterLabel,
  Scene,
  findEpoch,
  isoToMinutes,
} from "./scene.js";

export interface Viewport {
  centerLat: number;
  centerLon: number;
  zoom: number;
}

export type LayerName = "antennas" | "fires" | "trajectories" | "profiles";

export interface SelectedEpoch {
  antennaId: number;
  fireDate: string;
}

export interface ViewState {
  viewport: Viewport;
  selected: SelectedEpoch | null;
  /** Time cursor in minutes from the window start; always within the
   * scene window. */
  cursorMin: number;
  layers: Record<LayerName, boolean>;
  clusterFilter: ClusterLabel | null;
  /** Last user-facing message (e.g. "unknown epoch"); empty when none. */
  message: string;
}

export function windowMinutes(scene: Scene): number {
  if (!scene.window) return 0;
  return isoToMinutes(scene.window.end) - isoToMinutes(scene.window.start);
}

export function initialState(scene: Scene): ViewState {
  let lat = 0;
  let lon = 0;
  if (scene.antennas.length > 0) {
    for (const a of scene.antennas) {
      lat += a.lat;
      lon += a.lon;
    }
    lat /= scene.antennas.length;
    lon /= scene.antennas.length;
  }
  return {
    viewport: { centerLat: lat, centerLon: lon, zoom: 1 },
    selected: null,
    cursorMin: windowMinutes(scene),
    layers: { antennas: true, fires: true, trajectories: true, profiles: true },
    clusterFilter: null,
    message: "",
  };
}

export type Action =
  | { kind: "select_epoch"; antennaId: number; fireDate: string }
  | { kind: "deselect_epoch" }
  | { kind: "scrub_time"; minute: number }
  | { kind: "toggle_layer"; layer: LayerName }
  | { kind: "set_cluster_filter"; label: ClusterLabel | null }
  | { kind: "set_viewport"; viewport: Viewport };

export function apply(scene: Scene, state: ViewState, action: Action): ViewState {
  switch (action.kind) {
    case "select_epoch": {
      if (!findEpoch(scene, action.antennaId, action.fireDate)) {
        // unknown epoch is a no-op with a message, not an error
        return { ...state, message: `unknown epoch ${action.antennaId}/${action.fireDate}` };
      }
      return {
        ...state,
        selected: { antennaId: action.antennaId, fireDate: action.fireDate },
        message: "",
      };
    }
    case "deselect_epoch":
      return { ...state, selected: null, message: "" };
    case "scrub_time": {
      // out-of-window cursors clamp instead of erroring
      const max = windowMinutes(scene);
      const minute = Math.min(Math.max(action.minute, 0), max);
      return { ...state, cursorMin: minute, message: "" };
    }
    case "toggle_layer":
      return {
        ...state,
        layers: { ...state.layers, [action.layer]: !state.layers[action.layer] },
        message: "",
      };
    case "set_cluster_filter":
      return { ...state, clusterFilter: action.label, message: "" };
    case "set_viewport":
      return { ...state, viewport: { ...action.viewport }, message: "" };
  }
}

/** Replay a recorded interaction log from the initial state. */
export function replay(scene: Scene, log: Action[]): ViewState {
  let state = initialState(scene);
  for (const action of log) {
    state = apply(scene, state, action);
  }
  return state;
}
