/** Pure render-model computation: everything the DOM layer draws is
 * derived here from (scene, state), which keeps the logic testable
 * without a browser. */

import {
  ClusterLabel,
  CLUSTER_LABELS,
  Scene,
  SceneAntenna,
  SceneEpoch,
  findEpoch,
  isoToMinutes,
} from "./scene.js";
import { ViewState } from "./state.js";

export interface Polyline {
  user: number;
  /** Points at or before the time cursor, in scene order. */
  points: { lat: number; lon: number; minute: number }[];
}

export function visibleAntennas(scene: Scene, state: ViewState): SceneAntenna[] {
  if (!state.layers.antennas) return [];
  if (state.clusterFilter === null) return scene.antennas;
  return scene.antennas.filter((a) => a.label === state.clusterFilter);
}

export function antennaCountsByCluster(
  scene: Scene,
  state: ViewState,
): Record<ClusterLabel | "unlabeled", number> {
  const counts: Record<ClusterLabel | "unlabeled", number> = {
    RURAL: 0,
    SMALL_CITY: 0,
    BIG_CITY: 0,
    unlabeled: 0,
  };
  for (const a of visibleAntennas(scene, state)) {
    if (a.label === null) counts.unlabeled += 1;
    else counts[a.label] += 1;
  }
  return counts;
}

export function selectedEpoch(
  scene: Scene,
  state: ViewState,
): SceneEpoch | undefined {
  if (!state.selected) return undefined;
  return findEpoch(scene, state.selected.antennaId, state.selected.fireDate);
}

/** Visitor polylines of the selected epoch, truncated at the time cursor.
 * Only the selected epoch's trajectories are ever rendered. */
export function visiblePolylines(scene: Scene, state: ViewState): Polyline[] {
  if (!state.layers.trajectories || !scene.window) return [];
  const epoch = selectedEpoch(scene, state);
  if (!epoch) return [];
  const start = isoToMinutes(scene.window.start);
  const antennaPos = new Map(
    scene.antennas.map((a) => [a.id, { lat: a.lat, lon: a.lon }]),
  );
  const out: Polyline[] = [];
  for (const track of epoch.visitors) {
    const points = [];
    for (const p of track.points) {
      const minute = isoToMinutes(p.t) - start;
      if (minute > state.cursorMin) continue;
      const pos = antennaPos.get(p.antenna_id);
      if (!pos) continue;
      points.push({ lat: pos.lat, lon: pos.lon, minute });
    }
    out.push({ user: track.user, points });
  }
  return out;
}

/** Drawn segment count: points up to the cursor minus one per visitor,
 * floored at zero. */
export function segmentCount(scene: Scene, state: ViewState): number {
  let total = 0;
  for (const line of visiblePolylines(scene, state)) {
    total += Math.max(0, line.points.length - 1);
  }
  return total;
}

export function profileForSelection(scene: Scene, state: ViewState) {
  if (!state.layers.profiles) return undefined;
  const epoch = selectedEpoch(scene, state);
  if (!epoch || epoch.label === null) return undefined;
  return scene.profiles[epoch.label];
}

export interface StateSummary {
  antennaCounts: Record<ClusterLabel | "unlabeled", number>;
  fireCount: number;
  selected: string | null;
  cursorMin: number;
  polylineCount: number;
  segmentCount: number;
  layers: string[];
  clusterFilter: ClusterLabel | null;
  message: string;
}

/** Deterministic summary of what the DOM would show; interaction-replay
 * equality is checked against this. */
export function summarize(scene: Scene, state: ViewState): StateSummary {
  const epoch = selectedEpoch(scene, state);
  return {
    antennaCounts: antennaCountsByCluster(scene, state),
    fireCount: state.layers.fires ? scene.fires.length : 0,
    selected: epoch ? `${epoch.antenna_id}/${epoch.fire_date}` : null,
    cursorMin: state.cursorMin,
    polylineCount: visiblePolylines(scene, state).length,
    segmentCount: segmentCount(scene, state),
    layers: (Object.keys(state.layers) as (keyof ViewState["layers"])[])
      .filter((name) => state.layers[name])
      .sort(),
    clusterFilter: state.clusterFilter,
    message: state.message,
  };
}

export function clusterColor(label: ClusterLabel | null): string {
  switch (label) {
    case "RURAL":
      return "#2e7d32";
    case "SMALL_CITY":
      return "#f9a825";
    case "BIG_CITY":
      return "#c62828";
    default:
      return "#9e9e9e";
  }
}

export { CLUSTER_LABELS };
