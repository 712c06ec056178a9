/** Scene document types and validation.
 *
 * Mirrors the exporter's JSON schema (version 1). Validation is strict on
 * the parts the UI depends on; unknown extra fields pass through untouched.
 */

export const SCENE_SCHEMA_VERSION = 1;

export type ClusterLabel = "RURAL" | "SMALL_CITY" | "BIG_CITY";

export const CLUSTER_LABELS: ClusterLabel[] = [
  "RURAL",
  "SMALL_CITY",
  "BIG_CITY",
];

export interface SceneAntenna {
  id: number;
  lat: number;
  lon: number;
  label: ClusterLabel | null;
}

export interface SceneFire {
  lat: number;
  lon: number;
  date: string;
}

export interface TrajPoint {
  t: string; // ISO timestamp, minute resolution
  antenna_id: number;
}

export interface VisitorTrack {
  user: number;
  points: TrajPoint[];
}

export interface SceneEpoch {
  antenna_id: number;
  fire_date: string;
  distance_km: number;
  label: ClusterLabel | null;
  visitors: VisitorTrack[];
}

export interface SceneProfile {
  offsets: number[];
  mean: (number | null)[];
  n: number[];
}

export interface SceneWindow {
  start: string;
  end: string;
  missing_hours: string[];
}

export interface Scene {
  schema_version: number;
  window: SceneWindow | null;
  antennas: SceneAntenna[];
  fires: SceneFire[];
  epochs: SceneEpoch[];
  profiles: Partial<Record<ClusterLabel, SceneProfile>>;
  meta: {
    downsampled: boolean;
    stride: number;
    point_budget: number;
    total_points: number;
  };
}

export class SceneFormatError extends Error {}

/** Minutes since the Unix epoch for a timezone-less ISO timestamp.
 * Date parsing of zone-less strings is implementation-defined, so the
 * fields are split out by hand and treated as UTC. */
export function isoToMinutes(iso: string): number {
  const m = /^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2})(?::(\d{2}))?$/.exec(
    iso,
  );
  if (!m) {
    throw new SceneFormatError(`bad timestamp: ${iso}`);
  }
  const ms = Date.UTC(
    Number(m[1]),
    Number(m[2]) - 1,
    Number(m[3]),
    Number(m[4]),
    Number(m[5]),
    Number(m[6] ?? "0"),
  );
  return Math.floor(ms / 60_000);
}

function fail(message: string): never {
  throw new SceneFormatError(message);
}

function isRecord(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

/** Structural validation; throws SceneFormatError with a readable message
 * so the UI can surface it instead of failing silently. */
export function validateScene(data: unknown): Scene {
  if (!isRecord(data)) fail("scene must be a JSON object");
  if (data.schema_version !== SCENE_SCHEMA_VERSION) {
    fail(`unsupported scene schema version ${String(data.schema_version)}`);
  }
  for (const section of ["antennas", "fires", "epochs", "meta"]) {
    if (!(section in data)) fail(`scene missing section "${section}"`);
  }
  if (!Array.isArray(data.antennas)) fail("antennas must be an array");
  if (!Array.isArray(data.epochs)) fail("epochs must be an array");
  const known = new Set<number>();
  for (const a of data.antennas as unknown[]) {
    if (!isRecord(a) || typeof a.id !== "number") fail("bad antenna entry");
    known.add(a.id);
  }
  for (const e of data.epochs as unknown[]) {
    if (!isRecord(e) || typeof e.antenna_id !== "number") {
      fail("bad epoch entry");
    }
    if (!known.has(e.antenna_id)) {
      fail(`epoch references unknown antenna ${e.antenna_id}`);
    }
    if (!Array.isArray(e.visitors)) fail("epoch visitors must be an array");
  }
  const win = data.window;
  if (win !== null && win !== undefined) {
    if (!isRecord(win)) fail("window must be an object or null");
    isoToMinutes(String(win.start));
    isoToMinutes(String(win.end));
  }
  return data as unknown as Scene;
}

export type FetchLike = (url: string) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

/** Fetch and validate a scene. Network and schema failures reject with an
 * Error whose message the UI shows in the error banner. */
export async function loadScene(
  url: string,
  fetchImpl: FetchLike = fetch,
): Promise<Scene> {
  let resp;
  try {
    resp = await fetchImpl(url);
  } catch (err) {
    throw new Error(`scene fetch failed: ${String(err)}`);
  }
  if (!resp.ok) {
    throw new Error(`scene fetch failed: HTTP ${resp.status}`);
  }
  return validateScene(await resp.json());
}

export function epochKey(antennaId: number, fireDate: string): string {
  return `${antennaId}/${fireDate}`;
}

export function findEpoch(
  scene: Scene,
  antennaId: number,
  fireDate: string,
): SceneEpoch | undefined {
  return scene.epochs.find(
    (e) => e.antenna_id === antennaId && e.fire_date === fireDate,
  );
}
