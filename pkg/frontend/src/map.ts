/** Offline SVG map: antennas, fires and the selected epoch's polylines on
 * a blank graticule. No tiles, no network; the output is a plain SVG
 * string so it is also testable as data. */

import { Scene } from "./scene.js";
import { ViewState } from "./state.js";
import { clusterColor, visibleAntennas, visiblePolylines } from "./render.js";

export interface MapOptions {
  width: number;
  height: number;
  /** Graticule spacing in degrees. */
  graticuleStep: number;
}

export const DEFAULT_MAP: MapOptions = {
  width: 800,
  height: 600,
  graticuleStep: 1,
};

interface Extent {
  minLat: number;
  maxLat: number;
  minLon: number;
  maxLon: number;
}

function sceneExtent(scene: Scene): Extent {
  let minLat = Infinity;
  let maxLat = -Infinity;
  let minLon = Infinity;
  let maxLon = -Infinity;
  const eat = (lat: number, lon: number) => {
    minLat = Math.min(minLat, lat);
    maxLat = Math.max(maxLat, lat);
    minLon = Math.min(minLon, lon);
    maxLon = Math.max(maxLon, lon);
  };
  for (const a of scene.antennas) eat(a.lat, a.lon);
  for (const f of scene.fires) eat(f.lat, f.lon);
  if (!Number.isFinite(minLat)) {
    return { minLat: -1, maxLat: 1, minLon: -1, maxLon: 1 };
  }
  const padLat = Math.max(0.1, (maxLat - minLat) * 0.05);
  const padLon = Math.max(0.1, (maxLon - minLon) * 0.05);
  return {
    minLat: minLat - padLat,
    maxLat: maxLat + padLat,
    minLon: minLon - padLon,
    maxLon: maxLon + padLon,
  };
}

function projector(extent: Extent, opts: MapOptions) {
  const sx = opts.width / (extent.maxLon - extent.minLon);
  const sy = opts.height / (extent.maxLat - extent.minLat);
  return (lat: number, lon: number): [number, number] => [
    (lon - extent.minLon) * sx,
    // SVG y grows downward, latitude grows upward
    opts.height - (lat - extent.minLat) * sy,
  ];
}

function fmt(x: number): string {
  return x.toFixed(1);
}

export function renderMapSvg(
  scene: Scene,
  state: ViewState,
  opts: MapOptions = DEFAULT_MAP,
): string {
  const extent = sceneExtent(scene);
  const project = projector(extent, opts);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${opts.width}" ` +
      `height="${opts.height}" viewBox="0 0 ${opts.width} ${opts.height}">`,
  );
  parts.push(`<rect width="100%" height="100%" fill="#fafafa"/>`);

  // graticule
  parts.push(`<g class="graticule" stroke="#ddd" stroke-width="1">`);
  const lon0 = Math.ceil(extent.minLon / opts.graticuleStep) * opts.graticuleStep;
  for (let lon = lon0; lon <= extent.maxLon; lon += opts.graticuleStep) {
    const [x] = project(extent.minLat, lon);
    parts.push(`<line x1="${fmt(x)}" y1="0" x2="${fmt(x)}" y2="${opts.height}"/>`);
  }
  const lat0 = Math.ceil(extent.minLat / opts.graticuleStep) * opts.graticuleStep;
  for (let lat = lat0; lat <= extent.maxLat; lat += opts.graticuleStep) {
    const [, y] = project(lat, extent.minLon);
    parts.push(`<line x1="0" y1="${fmt(y)}" x2="${opts.width}" y2="${fmt(y)}"/>`);
  }
  parts.push(`</g>`);

  // fires
  if (state.layers.fires) {
    parts.push(`<g class="fires">`);
    for (const f of scene.fires) {
      const [x, y] = project(f.lat, f.lon);
      parts.push(
        `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="2" fill="#ff7043" ` +
          `opacity="0.6"/>`,
      );
    }
    parts.push(`</g>`);
  }

  // antennas
  parts.push(`<g class="antennas">`);
  for (const a of visibleAntennas(scene, state)) {
    const [x, y] = project(a.lat, a.lon);
    const highlight =
      state.selected !== null && state.selected.antennaId === a.id;
    parts.push(
      `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${highlight ? 6 : 3}" ` +
        `fill="${clusterColor(a.label)}"` +
        (highlight ? ` stroke="#000" stroke-width="2"` : ``) +
        `/>`,
    );
  }
  parts.push(`</g>`);

  // selected epoch trajectories up to the time cursor
  parts.push(`<g class="trajectories">`);
  for (const line of visiblePolylines(scene, state)) {
    if (line.points.length < 2) continue;
    const coords = line.points
      .map((p) => {
        const [x, y] = project(p.lat, p.lon);
        return `${fmt(x)},${fmt(y)}`;
      })
      .join(" ");
    parts.push(
      `<polyline points="${coords}" fill="none" stroke="#1565c0" ` +
        `stroke-width="1.5" opacity="0.8"/>`,
    );
  }
  parts.push(`</g>`);

  parts.push(`</svg>`);
  return parts.join("\n");
}
