"""Versioned JSON scene for the explorer UI, plus a read-only HTTP server.

The scene is a single self-contained document; the analysis is batch, so
interactivity lives in the client over precomputed data. JSON is canonical
(sorted keys, no insignificant whitespace, shortest round-trip floats) so
rerun and golden-file comparisons are bit-exact.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Dict, Iterable, List, Optional

from .epoch import AlignmentResult
from .fusion import FireSitePair
from .ingest import Antenna, FireEvent, Timeline
from .jsonio import canonical_dumps
from .lightclass import ClusterModel
from .trajflow import EpochVisitors

SCENE_SCHEMA_VERSION = 1


class SceneError(Exception):
    pass


def _nan_to_none(x: float) -> Optional[float]:
    return None if math.isnan(x) else float(x)


def build_scene(antennas: Iterable[Antenna],
                fires: Iterable[FireEvent],
                pairs: Iterable[FireSitePair],
                model: Optional[ClusterModel],
                alignment: Optional[AlignmentResult],
                epoch_visitors: Iterable[EpochVisitors],
                timeline: Optional[Timeline],
                point_budget: int = 200_000) -> Dict:
    """Assemble the self-contained scene document.

    Trajectories are downsampled (uniform stride per epoch) only when the
    total point count exceeds ``point_budget``; downsampling is noted in
    metadata. Dangling antenna references are an error.
    """
    antenna_list = list(antennas)
    known = {a.id for a in antenna_list}
    labels = model.labeled_assignment() if model is not None else {}

    ant_json = [
        {"id": a.id, "lat": a.position.lat, "lon": a.position.lon,
         "label": labels[a.id].value if a.id in labels else None}
        for a in antenna_list
    ]
    fires_json = [
        {"lat": f.position.lat, "lon": f.position.lon,
         "date": f.day.isoformat()}
        for f in fires
    ]

    visitors_by_key = {}
    total_points = 0
    ev_list = list(epoch_visitors)
    for ev in ev_list:
        total_points += len(ev.points)
    stride = 1
    if total_points > point_budget and total_points > 0:
        stride = math.ceil(total_points / point_budget)
    for ev in ev_list:
        key = (ev.pair.antenna_id, ev.pair.fire.day.isoformat())
        by_user: Dict = {}
        for i, p in enumerate(ev.points):
            if i % stride:
                continue
            by_user.setdefault(p.user_id, []).append(
                {"t": p.timestamp.isoformat(timespec="minutes"),
                 "antenna_id": p.antenna_id})
        visitors_by_key[key] = [
            {"user": uid, "points": pts} for uid, pts in sorted(by_user.items())
        ]

    epochs_json = []
    for p in pairs:
        if p.antenna_id not in known:
            raise SceneError(f"epoch references unknown antenna {p.antenna_id}")
        key = (p.antenna_id, p.fire.day.isoformat())
        epochs_json.append({
            "antenna_id": p.antenna_id,
            "fire_date": p.fire.day.isoformat(),
            "distance_km": p.distance_km,
            "label": labels[p.antenna_id].value if p.antenna_id in labels else None,
            "visitors": visitors_by_key.get(key, []),
        })

    profiles_json = {}
    if alignment is not None:
        for label, prof in alignment.profiles.items():
            profiles_json[label.value] = {
                "offsets": [int(o) for o in prof.offsets],
                "mean": [_nan_to_none(v) for v in prof.mean],
                "n": [int(v) for v in prof.n],
            }

    window_json = None
    if timeline is not None:
        window_json = {
            "start": timeline.window.start.isoformat(),
            "end": timeline.window.end.isoformat(),
            "missing_hours": [h.isoformat() for h in timeline.missing_hours()],
        }

    return {
        "schema_version": SCENE_SCHEMA_VERSION,
        "window": window_json,
        "antennas": ant_json,
        "fires": fires_json,
        "epochs": epochs_json,
        "profiles": profiles_json,
        "meta": {"downsampled": stride > 1, "stride": stride,
                 "point_budget": point_budget,
                 "total_points": total_points},
    }


def scene_to_json(scene: Dict) -> str:
    return canonical_dumps(scene)


def validate_scene(scene: Dict) -> None:
    """Structural checks performed before serving: schema version, required
    sections, and that every epoch's antenna resolves."""
    if not isinstance(scene, dict):
        raise SceneError("scene must be a JSON object")
    if scene.get("schema_version") != SCENE_SCHEMA_VERSION:
        raise SceneError(
            f"unsupported scene schema version {scene.get('schema_version')!r}")
    for section in ("antennas", "fires", "epochs", "profiles", "meta"):
        if section not in scene:
            raise SceneError(f"scene missing section {section!r}")
    known = {a["id"] for a in scene["antennas"]}
    for e in scene["epochs"]:
        if e["antenna_id"] not in known:
            raise SceneError(
                f"epoch references unknown antenna {e['antenna_id']}")


def epoch_slice(scene: Dict, antenna_id: int, fire_date: str) -> Optional[Dict]:
    """The single-epoch subtree of the full scene, or None."""
    for e in scene["epochs"]:
        if e["antenna_id"] == antenna_id and e["fire_date"] == fire_date:
            return e
    return None


class _SceneHandler(BaseHTTPRequestHandler):
    server_version = "firecell-scene/1"
    scene: Dict = {}
    scene_bytes: bytes = b"{}"

    def log_message(self, fmt, *args):      # quiet by default
        pass

    def _send(self, status: int, body: bytes,
              content_type: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Cache-Control", "public, max-age=3600")
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):       # noqa: N802 (http.server naming)
        path = self.path.rstrip("/") or "/"
        if path == "/healthz":
            self._send(200, b"ok", "text/plain")
            return
        if path == "/scene":
            self._send(200, self.scene_bytes)
            return
        parts = path.split("/")
        if len(parts) == 5 and parts[1] == "scene" and parts[2] == "epochs":
            try:
                antenna_id = int(parts[3])
            except ValueError:
                self._send(404, b'{"error":"not found"}')
                return
            sub = epoch_slice(self.scene, antenna_id, parts[4])
            if sub is None:
                self._send(404, b'{"error":"not found"}')
                return
            self._send(200, canonical_dumps(sub).encode("utf-8"))
            return
        self._send(404, b'{"error":"not found"}')


def load_scene_file(path: str) -> Dict:
    with open(path, "r", encoding="utf-8") as f:
        scene = json.load(f)
    validate_scene(scene)
    return scene


def make_server(scene: Dict, host: str = "127.0.0.1",
                port: int = 0) -> ThreadingHTTPServer:
    """A ready-to-run server over an immutable scene. The caller owns
    serve_forever / shutdown; responses never change for the process
    lifetime."""
    validate_scene(scene)
    handler = type("Handler", (_SceneHandler,), {
        "scene": scene,
        "scene_bytes": canonical_dumps(scene).encode("utf-8"),
    })
    return ThreadingHTTPServer((host, port), handler)


def serve(scene_path: str, host: str = "127.0.0.1", port: int = 8787) -> None:
    """Blocking entry point used by the CLI: refuses to start on a
    malformed scene."""
    scene = load_scene_file(scene_path)
    server = make_server(scene, host, port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
