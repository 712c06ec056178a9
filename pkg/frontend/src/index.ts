/** Browser bootstrap: fetch the scene, keep a ViewState, re-render the
 * map and summary on every action. All logic lives in the pure modules;
 * this file only wires DOM events to the action log. */

import { loadScene, Scene } from "./scene.js";
import {
  Action,
  ViewState,
  apply,
  initialState,
  windowMinutes,
} from "./state.js";
import { summarize, CLUSTER_LABELS } from "./render.js";
import { renderMapSvg } from "./map.js";

const SCENE_URL =
  new URLSearchParams(location.search).get("scene") ??
  "http://127.0.0.1:8787/scene";

interface App {
  scene: Scene;
  state: ViewState;
  log: Action[];
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function dispatch(app: App, action: Action): void {
  app.log.push(action);
  app.state = apply(app.scene, app.state, action);
  render(app);
}

function render(app: App): void {
  el("map").innerHTML = renderMapSvg(app.scene, app.state);
  const summary = summarize(app.scene, app.state);
  el("summary").textContent = JSON.stringify(summary, null, 2);
  el<HTMLInputElement>("cursor").value = String(app.state.cursorMin);
  const msg = el("message");
  msg.textContent = app.state.message;
  msg.style.display = app.state.message ? "block" : "none";
}

function buildControls(app: App): void {
  const cursor = el<HTMLInputElement>("cursor");
  cursor.max = String(windowMinutes(app.scene));
  cursor.addEventListener("input", () => {
    dispatch(app, { kind: "scrub_time", minute: Number(cursor.value) });
  });

  const select = el<HTMLSelectElement>("epoch");
  for (const e of app.scene.epochs) {
    const opt = document.createElement("option");
    opt.value = `${e.antenna_id}/${e.fire_date}`;
    opt.textContent = `${e.label ?? "?"} antenna ${e.antenna_id} on ${e.fire_date}`;
    select.appendChild(opt);
  }
  select.addEventListener("change", () => {
    if (!select.value) {
      dispatch(app, { kind: "deselect_epoch" });
      return;
    }
    const [antennaId, fireDate] = select.value.split("/");
    dispatch(app, {
      kind: "select_epoch",
      antennaId: Number(antennaId),
      fireDate,
    });
  });

  const filter = el<HTMLSelectElement>("cluster");
  filter.addEventListener("change", () => {
    dispatch(app, {
      kind: "set_cluster_filter",
      label: filter.value
        ? (filter.value as (typeof CLUSTER_LABELS)[number])
        : null,
    });
  });

  for (const layer of ["antennas", "fires", "trajectories", "profiles"] as const) {
    el<HTMLInputElement>(`layer-${layer}`).addEventListener("change", () => {
      dispatch(app, { kind: "toggle_layer", layer });
    });
  }

  let timer: ReturnType<typeof setInterval> | null = null;
  el("play").addEventListener("click", () => {
    if (timer !== null) {
      clearInterval(timer);
      timer = null;
      return;
    }
    const step = Number(el<HTMLInputElement>("speed").value) || 60;
    timer = setInterval(() => {
      const next = app.state.cursorMin + step;
      dispatch(app, { kind: "scrub_time", minute: next });
      if (next >= windowMinutes(app.scene) && timer !== null) {
        clearInterval(timer);
        timer = null;
      }
    }, 100);
  });

  el("download-log").addEventListener("click", () => {
    const blob = new Blob([JSON.stringify(app.log, null, 2)], {
      type: "application/json",
    });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "interaction-log.json";
    a.click();
  });
}

async function main(): Promise<void> {
  const status = el("message");
  status.textContent = "loading scene...";
  status.style.display = "block";
  let scene: Scene;
  try {
    scene = await loadScene(SCENE_URL);
  } catch (err) {
    status.textContent = `failed to load scene: ${(err as Error).message}`;
    return;
  }
  const app: App = { scene, state: initialState(scene), log: [] };
  buildControls(app);
  render(app);
}

main();
