import hashlib
import os
from datetime import date, timedelta

import numpy as np
import pytest

from firecell import fusion
from firecell.epoch import Direction, build_series
from firecell.lightclass import kmeans_1d, label_clusters, site_luminosities
from firecell.synthgen import ConfigError, SynthConfig, generate

from conftest import make_small_config

FILES = ("antennas.csv", "traffic.csv", "trajectories.csv", "fires.csv",
         "lights.asc", "manifest.json")


def file_hashes(out_dir):
    out = {}
    for name in FILES:
        with open(os.path.join(out_dir, name), "rb") as f:
            out[name] = hashlib.sha256(f.read()).hexdigest()
    return out


class TestDeterminism:
    def test_same_seed_byte_identical(self, tmp_path):
        cfg = make_small_config()
        generate(cfg, str(tmp_path / "a"))
        generate(make_small_config(), str(tmp_path / "b"))
        assert file_hashes(str(tmp_path / "a")) == file_hashes(str(tmp_path / "b"))

    def test_different_seed_differs(self, tmp_path):
        generate(make_small_config(), str(tmp_path / "a"))
        generate(make_small_config(seed=12), str(tmp_path / "c"))
        assert file_hashes(str(tmp_path / "a"))["antennas.csv"] \
            != file_hashes(str(tmp_path / "c"))["antennas.csv"]


class TestConfig:
    def test_defaults_validate(self):
        SynthConfig().validate()

    def test_bad_mode(self):
        with pytest.raises(ConfigError):
            make_small_config(mode="exact").validate()

    def test_too_many_epoch_sites(self):
        with pytest.raises(ConfigError):
            make_small_config(n_rural_epoch_sites=1000).validate()

    def test_fire_range_must_leave_room(self):
        with pytest.raises(ConfigError):
            make_small_config(fire_day_max=58).validate()

    def test_from_mapping_round_trip(self):
        cfg = SynthConfig.from_mapping({
            "seed": "5", "mode": "stochastic", "amp_rural": "12.5",
            "window_start": "2012-01-01",
            "spike_days": "2012-01-15, 2012-02-01"})
        assert cfg.seed == 5
        assert cfg.mode == "stochastic"
        assert cfg.amp_rural == 12.5
        assert cfg.window_start == date(2012, 1, 1)
        assert cfg.spike_days == (date(2012, 1, 15), date(2012, 2, 1))

    def test_from_mapping_unknown_key(self):
        with pytest.raises(ConfigError):
            SynthConfig.from_mapping({"bogus": "1"})


class TestGroundTruth:
    def test_join_recovers_planted_pairs_exactly(self, small_scenario):
        result = small_scenario.join(threshold_km=1.0)
        got = {(p.antenna_id, p.fire.day.isoformat()) for p in result.pairs}
        want = {(e["antenna_id"], e["fire_date"])
                for e in small_scenario.manifest["epochs"]}
        assert got == want
        assert result.summary.n_pairs \
            == small_scenario.manifest["join"]["n_pairs"]
        hist = {str(k): v for k, v in result.summary.histogram.items()}
        assert hist == small_scenario.manifest["join"]["histogram"]

    def test_planted_distances_reproduced(self, small_scenario):
        result = small_scenario.join(threshold_km=1.0)
        by_key = {(p.antenna_id, p.fire.day.isoformat()): p.distance_km
                  for p in result.pairs}
        for e in small_scenario.manifest["epochs"]:
            got = by_key[(e["antenna_id"], e["fire_date"])]
            assert got == pytest.approx(e["distance_km"], rel=1e-9)

    def test_expected_hourly_counts_match_parsed_traffic(self, small_scenario):
        man = small_scenario.manifest
        traffic = small_scenario.traffic
        present = traffic.timeline.present
        for aid_str, expected in man["expected_hourly_counts"].items():
            series = build_series(traffic, int(aid_str), Direction.BOTH)
            exp = np.array(expected)
            assert np.array_equal(series.values[present], exp[present])

    def test_missing_hours_match_manifest(self, small_scenario):
        man = small_scenario.manifest
        tl = small_scenario.traffic.timeline
        missing = np.flatnonzero(~tl.present).tolist()
        assert missing == man["missing_hour_indices"]

    def test_classification_recovers_tiers(self, small_scenario):
        man = small_scenario.manifest
        epoch_ids = {e["antenna_id"] for e in man["epochs"]}
        ants = [a for a in small_scenario.antennas if a.id in epoch_ids]
        lum = site_luminosities(ants, small_scenario.raster(), 7.5)
        model = label_clusters(kmeans_1d(lum.sites, k=3))
        tiers = man["antenna_tiers"]
        for aid in epoch_ids:
            assert model.label_of(aid).value == tiers[str(aid)]

    def test_visitor_counts_match_manifest(self, small_scenario):
        man = small_scenario.manifest
        index = small_scenario.trajectory_index()
        pairs = small_scenario.join(1.0).pairs
        from firecell.trajflow import collect_epoch_visitors
        epochs = collect_epoch_visitors(index, pairs)
        by_key = {(e.pair.antenna_id, e.pair.fire.day.isoformat()):
                  len(e.visitors) for e in epochs}
        for e in man["epochs"]:
            assert by_key[(e["antenna_id"], e["fire_date"])] == e["n_visitors"]

    def test_zero_visitor_fraction_exact(self, small_scenario):
        man = small_scenario.manifest
        n_zero = sum(1 for e in man["epochs"] if e["n_visitors"] == 0)
        assert n_zero / len(man["epochs"]) == man["zero_visitor_fraction"]

    def test_bulk_fires_never_join(self, small_scenario):
        # bulk fires live in the southern zone; even a generous threshold
        # only ever pairs the planted (northern) fires
        result = small_scenario.join(threshold_km=5.0)
        for p in result.pairs:
            assert p.fire.position.lat > 5.9


class TestStochasticMode:
    def test_counts_are_integers_near_expectation(self, tmp_path):
        cfg = make_small_config(mode="stochastic", n_days=30, fire_day_max=10,
                                missing_hours=0)
        out = str(tmp_path / "s")
        man = generate(cfg, out)
        total = 0.0
        n = 0
        with open(os.path.join(out, "traffic.csv"), encoding="utf-8") as f:
            for line in f:
                val = line.split(",")[3]
                assert "." not in val
                total += int(val)
                n += 1
        expected = sum(man["expected_daily_totals"])
        assert total == pytest.approx(expected, rel=0.01)
