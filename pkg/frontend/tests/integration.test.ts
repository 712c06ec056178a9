/** End-to-end checks against a real exporter scene (committed fixture
 * produced by the pipeline on the small synthetic scenario). */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { validateScene } from "../src/scene.js";
import {
  antennaCountsByCluster,
  segmentCount,
  summarize,
  visiblePolylines,
} from "../src/render.js";
import { Action, initialState, replay, windowMinutes } from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));
const raw = readFileSync(join(here, "scene-fixture.json"), "utf-8");
const scene = validateScene(JSON.parse(raw));

describe("default synthetic scene", () => {
  it("loads and validates", () => {
    expect(scene.schema_version).toBe(1);
    expect(scene.antennas.length).toBeGreaterThan(0);
    expect(scene.epochs.length).toBeGreaterThan(0);
  });

  it("renders the correct antenna count per cluster", () => {
    const counts = antennaCountsByCluster(scene, initialState(scene));
    // recompute independently from the raw document
    const want = { RURAL: 0, SMALL_CITY: 0, BIG_CITY: 0, unlabeled: 0 };
    for (const a of scene.antennas) {
      if (a.label === null) want.unlabeled += 1;
      else want[a.label] += 1;
    }
    expect(counts).toEqual(want);
    const total = Object.values(counts).reduce((a, b) => a + b, 0);
    expect(total).toBe(scene.antennas.length);
  });

  it("every epoch's polyline count equals its scene visitor count", () => {
    for (const e of scene.epochs) {
      const state = replay(scene, [
        {
          kind: "select_epoch",
          antennaId: e.antenna_id,
          fireDate: e.fire_date,
        },
      ]);
      const lines = visiblePolylines(scene, state);
      expect(lines.length).toBe(e.visitors.length);
      const rendered = lines.reduce((acc, l) => acc + l.points.length, 0);
      const inScene = e.visitors.reduce((acc, v) => acc + v.points.length, 0);
      expect(rendered).toBe(inScene);
    }
  });

  it("scrub at window start/end gives zero/full segments on every epoch", () => {
    for (const e of scene.epochs) {
      const select: Action = {
        kind: "select_epoch",
        antennaId: e.antenna_id,
        fireDate: e.fire_date,
      };
      const atStart = replay(scene, [select, { kind: "scrub_time", minute: 0 }]);
      expect(segmentCount(scene, atStart)).toBe(0);
      const atEnd = replay(scene, [
        select,
        { kind: "scrub_time", minute: windowMinutes(scene) },
      ]);
      const full = e.visitors.reduce(
        (acc, v) => acc + Math.max(0, v.points.length - 1),
        0,
      );
      expect(segmentCount(scene, atEnd)).toBe(full);
    }
  });

  it("a recorded interaction replay reproduces the final state summary", () => {
    const e = scene.epochs[0];
    const log: Action[] = [
      { kind: "set_cluster_filter", label: "RURAL" },
      { kind: "select_epoch", antennaId: e.antenna_id, fireDate: e.fire_date },
      { kind: "scrub_time", minute: Math.floor(windowMinutes(scene) / 2) },
      { kind: "toggle_layer", layer: "fires" },
      { kind: "scrub_time", minute: windowMinutes(scene) },
    ];
    const first = summarize(scene, replay(scene, log));
    const second = summarize(scene, replay(scene, log));
    expect(second).toEqual(first);
    expect(first.selected).toBe(`${e.antenna_id}/${e.fire_date}`);
  });
});
