from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import pytest

from firecell import fusion, trajflow
from firecell.cli import _load_antennas, _load_fires, _load_traffic_data, WORLD_BBOX
from firecell.epoch import TrafficData
from firecell.ingest import Antenna, parse_raster, parse_trajectories
from firecell.synthgen import SynthConfig, generate


def make_small_config(**overrides) -> SynthConfig:
    base = dict(
        seed=11, n_antennas=80, n_fires=200, users_per_period=500,
        n_big_cities=2, n_small_cities=3, n_rural_epoch_sites=6,
        n_double_fire_sites=2, antennas_per_big_city=4,
        antennas_per_small_city=3, n_days=60, missing_hours=10,
        fire_day_min=5, fire_day_max=30,
        background_pings_per_user_day=0.05)
    base.update(overrides)
    return SynthConfig(**base)


def make_acceptance_config(**overrides) -> SynthConfig:
    # 93 fire sites + 7 double-fire sites = 100 epochs, so the planted
    # 0.18 zero-visitor fraction is exactly representable.
    base = dict(
        seed=7, n_antennas=320, n_fires=2500, users_per_period=2000,
        n_big_cities=8, n_small_cities=15, n_rural_epoch_sites=70,
        n_double_fire_sites=7, antennas_per_big_city=6,
        antennas_per_small_city=4, n_days=150, missing_hours=100,
        fire_day_min=10, fire_day_max=100,
        background_pings_per_user_day=0.02)
    base.update(overrides)
    return SynthConfig(**base)


@dataclass
class Scenario:
    cfg: SynthConfig
    out_dir: str
    manifest: Dict
    _antennas: Optional[List[Antenna]] = None
    _traffic: Optional[TrafficData] = None

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    @property
    def antennas(self) -> List[Antenna]:
        if self._antennas is None:
            self._antennas = _load_antennas(self.path("antennas.csv"))
        return self._antennas

    @property
    def traffic(self) -> TrafficData:
        if self._traffic is None:
            self._traffic = _load_traffic_data(
                self.path("traffic.csv"), self.antennas, self.cfg.window)
        return self._traffic

    def fires(self):
        return _load_fires(self.path("fires.csv"), WORLD_BBOX).fires

    def raster(self):
        with open(self.path("lights.asc"), encoding="utf-8") as f:
            return parse_raster(f)

    def join(self, threshold_km: float = 1.0) -> fusion.JoinResult:
        return fusion.join(self.fires(), self.antennas, threshold_km)

    def trajectory_index(self) -> trajflow.TrajectoryIndex:
        with open(self.path("trajectories.csv"), encoding="utf-8",
                  newline="") as f:
            return trajflow.TrajectoryIndex(parse_trajectories(f),
                                            self.cfg.window)


def build_scenario(cfg: SynthConfig, out_dir: str) -> Scenario:
    manifest = generate(cfg, out_dir)
    return Scenario(cfg, out_dir, manifest)


# One human-readable verdict line per acceptance criterion, printed in the
# terminal summary so capture settings cannot hide them.
ACCEPTANCE_RESULTS: List[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_scenario(tmp_path_factory) -> Scenario:
    out = tmp_path_factory.mktemp("synth_small")
    return build_scenario(make_small_config(), str(out))


@pytest.fixture(scope="session")
def acc_scenario(tmp_path_factory) -> Scenario:
    out = tmp_path_factory.mktemp("synth_acc")
    return build_scenario(make_acceptance_config(), str(out))
