/** A small hand-built scene matching the exporter's schema version 1. */

import { Scene } from "../src/scene.js";

export function makeScene(): Scene {
  return {
    schema_version: 1,
    window: {
      start: "2011-12-01T00:00:00",
      end: "2011-12-06T00:00:00",
      missing_hours: ["2011-12-05T07:00:00"],
    },
    antennas: [
      { id: 1, lat: 6.1, lon: -5.2, label: "RURAL" },
      { id: 2, lat: 6.5, lon: -5.0, label: "SMALL_CITY" },
      { id: 3, lat: 7.0, lon: -4.5, label: "BIG_CITY" },
      { id: 4, lat: 6.8, lon: -4.9, label: null },
    ],
    fires: [
      { lat: 6.105, lon: -5.203, date: "2011-12-03" },
      { lat: 7.004, lon: -4.497, date: "2011-12-04" },
    ],
    epochs: [
      {
        antenna_id: 1,
        fire_date: "2011-12-03",
        distance_km: 0.62,
        label: "RURAL",
        visitors: [
          {
            user: 11,
            points: [
              { t: "2011-12-03T08:00", antenna_id: 4 },
              { t: "2011-12-03T10:00", antenna_id: 1 },
              { t: "2011-12-03T10:45", antenna_id: 1 },
              { t: "2011-12-03T20:00", antenna_id: 2 },
            ],
          },
          {
            user: 12,
            points: [
              { t: "2011-12-03T09:30", antenna_id: 1 },
              { t: "2011-12-03T11:00", antenna_id: 1 },
            ],
          },
        ],
      },
      {
        antenna_id: 3,
        fire_date: "2011-12-04",
        distance_km: 0.31,
        label: "BIG_CITY",
        visitors: [
          {
            user: 21,
            points: [
              { t: "2011-12-04T12:00", antenna_id: 3 },
              { t: "2011-12-04T13:00", antenna_id: 3 },
              { t: "2011-12-04T14:00", antenna_id: 4 },
            ],
          },
        ],
      },
    ],
    profiles: {
      RURAL: {
        offsets: [-1, 0, 1],
        mean: [0.4, null, 0.9],
        n: [2, 0, 2],
      },
    },
    meta: {
      downsampled: false,
      stride: 1,
      point_budget: 200000,
      total_points: 9,
    },
  };
}
