import json
import threading
import urllib.error
import urllib.request
from datetime import date, datetime, timedelta

import numpy as np
import pytest

from firecell.epoch import (AlignedProfile, AlignmentResult, N_OFFSETS,
                            OFFSET_HI, OFFSET_LO)
from firecell.exporter import (SceneError, build_scene, epoch_slice,
                               load_scene_file, make_server, scene_to_json,
                               validate_scene)
from firecell.fusion import FireSitePair
from firecell.geo import GeoPoint
from firecell.ingest import (Antenna, FireEvent, ObservationWindow, Timeline,
                             TrajectoryPoint)
from firecell.jsonio import canonical_dumps
from firecell.lightclass import ClusterModel, LABELS_ASCENDING, SiteClass
from firecell.trajflow import EpochVisitors

WINDOW = ObservationWindow(datetime(2011, 12, 1),
                           datetime(2011, 12, 1) + timedelta(days=5))


def sample_scene(point_budget=200_000, n_points=4):
    antennas = [Antenna(1, GeoPoint(5.0, -5.0)), Antenna(2, GeoPoint(6.0, -5.5)),
                Antenna(3, GeoPoint(7.0, -4.0))]
    fire = FireEvent(GeoPoint(5.001, -5.001), date(2011, 12, 3))
    pair = FireSitePair(1, fire, 0.3)
    model = ClusterModel(centroids=(1.0, 2.0, 3.0),
                         assignment={1: 0, 2: 1, 3: 2},
                         wcss_history=(), n_iter=0, labels=LABELS_ASCENDING)
    offsets = np.arange(OFFSET_LO, OFFSET_HI + 1)
    mean = np.full(N_OFFSETS, 0.5)
    mean[0] = np.nan
    n = np.full(N_OFFSETS, 2, dtype=np.int64)
    n[0] = 0
    prof = AlignedProfile(SiteClass.RURAL, offsets, mean, n)
    alignment = AlignmentResult({SiteClass.RURAL: prof},
                                {SiteClass.RURAL: 1}, {}, [])
    pts = tuple(
        TrajectoryPoint(7, datetime(2011, 12, 3, 10, 5 * i), 1)
        for i in range(n_points))
    ev = EpochVisitors(pair, frozenset({(0, 7)}), pts)
    present = np.ones(WINDOW.n_hours, dtype=bool)
    present[10] = False
    return build_scene(antennas, [fire], [pair], model, alignment, [ev],
                       Timeline(WINDOW, present), point_budget=point_budget)


class TestBuildScene:
    def test_sections_and_labels(self):
        scene = sample_scene()
        validate_scene(scene)
        assert scene["antennas"][0]["label"] == "RURAL"
        assert scene["antennas"][2]["label"] == "BIG_CITY"
        assert scene["epochs"][0]["label"] == "RURAL"
        assert len(scene["epochs"][0]["visitors"]) == 1
        assert len(scene["epochs"][0]["visitors"][0]["points"]) == 4

    def test_nan_profile_values_become_null(self):
        scene = sample_scene()
        prof = scene["profiles"]["RURAL"]
        assert prof["mean"][0] is None
        assert prof["n"][0] == 0
        assert prof["mean"][1] == 0.5

    def test_missing_hours_listed(self):
        scene = sample_scene()
        assert scene["window"]["missing_hours"] == [
            WINDOW.hour_at(10).isoformat()]

    def test_downsampling_respects_budget(self):
        scene = sample_scene(point_budget=2, n_points=10)
        assert scene["meta"]["downsampled"]
        kept = sum(len(v["points"])
                   for e in scene["epochs"] for v in e["visitors"])
        assert kept <= 2
        full = sample_scene(point_budget=200_000, n_points=10)
        assert not full["meta"]["downsampled"]
        assert full["meta"]["stride"] == 1

    def test_dangling_antenna_rejected(self):
        fire = FireEvent(GeoPoint(5.0, -5.0), date(2011, 12, 3))
        pair = FireSitePair(99, fire, 0.3)
        with pytest.raises(SceneError):
            build_scene([Antenna(1, GeoPoint(5.0, -5.0))], [fire], [pair],
                        None, None, [], None)


class TestCanonicalJson:
    def test_serialization_is_stable(self):
        s1 = scene_to_json(sample_scene())
        s2 = scene_to_json(sample_scene())
        assert s1 == s2

    def test_key_order_independent(self):
        scene = sample_scene()
        reordered = json.loads(scene_to_json(scene))
        assert scene_to_json(reordered) == scene_to_json(scene)

    def test_no_nan_tokens(self):
        text = scene_to_json(sample_scene())
        assert "NaN" not in text
        assert "Infinity" not in text


class TestValidateScene:
    def test_wrong_schema_version(self):
        scene = sample_scene()
        scene["schema_version"] = 99
        with pytest.raises(SceneError):
            validate_scene(scene)

    def test_missing_section(self):
        scene = sample_scene()
        del scene["profiles"]
        with pytest.raises(SceneError):
            validate_scene(scene)

    def test_load_rejects_bad_file(self, tmp_path):
        p = tmp_path / "scene.json"
        p.write_text('{"schema_version":1}')
        with pytest.raises(SceneError):
            load_scene_file(str(p))


class TestEpochSlice:
    def test_found_and_not_found(self):
        scene = sample_scene()
        sub = epoch_slice(scene, 1, "2011-12-03")
        assert sub is not None and sub["antenna_id"] == 1
        assert epoch_slice(scene, 1, "2011-12-04") is None
        assert epoch_slice(scene, 5, "2011-12-03") is None


@pytest.fixture()
def server():
    scene = sample_scene()
    srv = make_server(scene)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{srv.server_address[1]}"
    yield scene, base
    srv.shutdown()
    srv.server_close()


def get(url):
    with urllib.request.urlopen(url) as resp:
        return resp.status, resp.read(), dict(resp.headers)


class TestServer:
    def test_healthz(self, server):
        _, base = server
        status, body, _ = get(base + "/healthz")
        assert status == 200 and body == b"ok"

    def test_scene_byte_stable_and_cors(self, server):
        scene, base = server
        expected = canonical_dumps(scene).encode("utf-8")
        for _ in range(3):
            status, body, headers = get(base + "/scene")
            assert status == 200
            assert body == expected
            assert headers["Access-Control-Allow-Origin"] == "*"
            assert headers["Content-Type"] == "application/json"

    def test_epoch_endpoint_equals_slice(self, server):
        scene, base = server
        status, body, _ = get(base + "/scene/epochs/1/2011-12-03")
        assert status == 200
        assert body == canonical_dumps(
            epoch_slice(scene, 1, "2011-12-03")).encode("utf-8")

    def test_unknown_paths_404(self, server):
        _, base = server
        for path in ("/nope", "/scene/epochs/1/2011-12-04",
                     "/scene/epochs/xyz/2011-12-03"):
            with pytest.raises(urllib.error.HTTPError) as exc:
                get(base + path)
            assert exc.value.code == 404
