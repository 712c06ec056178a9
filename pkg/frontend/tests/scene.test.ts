import { describe, expect, it } from "vitest";

import {
  SceneFormatError,
  epochKey,
  findEpoch,
  isoToMinutes,
  loadScene,
  validateScene,
} from "../src/scene.js";
import { makeScene } from "./fixture.js";

describe("isoToMinutes", () => {
  it("handles minute and second resolution", () => {
    const base = isoToMinutes("2011-12-01T00:00:00");
    expect(isoToMinutes("2011-12-01T00:01") - base).toBe(1);
    expect(isoToMinutes("2011-12-01T01:00:00") - base).toBe(60);
    expect(isoToMinutes("2011-12-02T00:00") - base).toBe(1440);
  });

  it("rejects garbage", () => {
    expect(() => isoToMinutes("yesterday")).toThrow(SceneFormatError);
  });
});

describe("validateScene", () => {
  it("accepts the fixture", () => {
    expect(() => validateScene(makeScene())).not.toThrow();
  });

  it("rejects a wrong schema version with a visible error", () => {
    const scene = { ...makeScene(), schema_version: 2 };
    expect(() => validateScene(scene)).toThrow(/schema version/);
  });

  it("rejects missing sections", () => {
    const scene: Record<string, unknown> = { ...makeScene() };
    delete scene.antennas;
    expect(() => validateScene(scene)).toThrow(/antennas/);
  });

  it("rejects dangling epoch antenna references", () => {
    const scene = makeScene();
    scene.epochs[0].antenna_id = 99;
    expect(() => validateScene(scene)).toThrow(/unknown antenna 99/);
  });
});

describe("loadScene", () => {
  it("returns a validated scene on success", async () => {
    const scene = await loadScene("http://x/scene", async () => ({
      ok: true,
      status: 200,
      json: async () => makeScene() as unknown,
    }));
    expect(scene.antennas).toHaveLength(4);
  });

  it("surfaces HTTP failures", async () => {
    await expect(
      loadScene("http://x/scene", async () => ({
        ok: false,
        status: 502,
        json: async () => ({}),
      })),
    ).rejects.toThrow(/HTTP 502/);
  });

  it("surfaces network failures", async () => {
    await expect(
      loadScene("http://x/scene", async () => {
        throw new Error("refused");
      }),
    ).rejects.toThrow(/fetch failed/);
  });

  it("surfaces schema failures", async () => {
    await expect(
      loadScene("http://x/scene", async () => ({
        ok: true,
        status: 200,
        json: async () => ({ schema_version: 42 }),
      })),
    ).rejects.toThrow(/schema version/);
  });
});

describe("epoch lookup", () => {
  it("finds existing epochs and misses absent ones", () => {
    const scene = makeScene();
    expect(findEpoch(scene, 1, "2011-12-03")?.label).toBe("RURAL");
    expect(findEpoch(scene, 1, "2011-12-04")).toBeUndefined();
    expect(epochKey(1, "2011-12-03")).toBe("1/2011-12-03");
  });
});
