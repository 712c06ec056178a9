"""Deterministic synthetic-data generator with a planted ground-truth
manifest.

Emits the five canonical input files (antennas, traffic, trajectories,
fires, night-light raster) plus ``manifest.json`` recording every planted
quantity, so every downstream module can be checked against known truth.

Randomness comes exclusively from numpy's ``default_rng`` (PCG64, 64-bit),
seeded from the config: identical (config, seed) gives byte-identical
output. Two modes:

* ``deterministic`` - hourly call counts are the exact real-valued
  expectations (written as shortest round-trip decimals), so oracle
  comparisons are sharp.
* ``stochastic`` - counts are Poisson draws around those expectations;
  tests use sampling tolerances.

Planted structure (defaults mirror the canonical scenario scale):

* 3 site tiers: big-city / small-city / rural, realized as Gaussian
  night-light blobs of very different integrated brightness, so the k=3
  clustering of fire-site luminosities is cleanly separable.
* One antenna per city center plus ring antennas; fire-adjacent "epoch"
  sites are the 8 big centers, 15 small centers and 72 rural antennas.
  A configurable number of sites receive two fires.
* All remaining fires land in a southern box far (> 50 km) from every
  antenna, so the spatial-join ground truth is exactly the planted pairs.
* Daily call volume carries a per-month decay, holiday dips and spike
  days; the day after a fire the site's daily shape changes per tier
  (rural: morning/evening peak inversion of configurable magnitude;
  small city: morning boost; big city: uniform reduction).
* Planted visitors pass by each fire antenna on its fire day; a
  configurable fraction of epochs gets none. Background trajectory
  traffic only ever touches non-epoch antennas.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields as dc_fields
from datetime import date, datetime, time, timedelta
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .geo import GeoPoint, KM_PER_DEG_LAT, LightRaster, haversine_km
from .ingest import ObservationWindow
from .jsonio import canonical_dumps

# Geometry of the scenario (degrees). Antennas and bulk fires live in
# disjoint zones separated by ~55 km so bulk fires can never join.
RASTER_LAT = (3.8, 11.009)
RASTER_LON = (-9.0, -2.493)
ANTENNA_ZONE = (6.0, 10.6, -8.6, -2.9)          # min_lat, max_lat, min_lon, max_lon
BULK_FIRE_ZONE = (4.0, 5.5, -8.5, -3.0)
CITY_MARGIN = 0.3           # city centers stay this far inside the antenna zone
BIG_CITY_MIN_SEP = 0.9      # degrees between big-city centers
CITY_MIN_SEP = 0.35         # degrees between any two city centers
RURAL_CITY_CLEARANCE_KM = 25.0
RURAL_MIN_SPACING_KM = 2.5

# Baseline hour-of-day call shape: morning peak at 09 (20), higher evening
# peak at 19 (24).
BASE_SHAPE = (3, 2, 2, 2, 3, 5,
              8, 12, 16, 20, 18, 14, 10,
              9, 9, 10,
              12, 16, 20, 24, 22, 16, 10, 6)
MORNING = range(6, 13)      # inclusive 6..12
EVENING = range(16, 23)     # inclusive 16..22
# Post-fire evening replacement whose maximum equals the baseline MORNING
# peak (20): combined with the morning scale-up this realizes an exact
# configurable morning/evening inversion ratio.
EVENING_INVERTED = (10.0, 13.5, 16.5, 20.0, 18.5, 13.5, 8.5)

TIERS = ("BIG_CITY", "SMALL_CITY", "RURAL")


class ConfigError(Exception):
    pass


@dataclass
class SynthConfig:
    seed: int = 1231
    mode: str = "deterministic"         # or "stochastic"

    n_antennas: int = 1231
    window_start: date = date(2011, 12, 1)
    n_days: int = 150                   # 3600 hours
    n_fires: int = 59469
    missing_hours: int = 100

    n_big_cities: int = 8
    n_small_cities: int = 15
    n_rural_epoch_sites: int = 72
    n_double_fire_sites: int = 14
    antennas_per_big_city: int = 12
    antennas_per_small_city: int = 8

    fire_day_min: int = 10
    fire_day_max: int = 100

    amp_big: float = 200.0
    amp_small: float = 50.0
    amp_rural: float = 10.0
    duration_factor: float = 2.0

    monthly_decay: float = -0.02        # multiplicative per day-of-month
    holiday_dip_days: Tuple[date, ...] = (date(2011, 12, 24),
                                          date(2011, 12, 25),
                                          date(2011, 12, 26))
    holiday_dip_factor: float = 0.7
    spike_days: Tuple[date, ...] = (date(2012, 1, 1), date(2012, 3, 1))
    spike_factor: float = 1.5

    inversion_magnitude: float = 1.3
    inversion_duration_days: int = 1
    small_city_morning_boost: float = 1.15
    big_city_reduction: float = 0.7

    users_per_period: int = 50000
    background_pings_per_user_day: float = 0.05
    visitors_big: int = 50
    visitors_small: int = 10
    visitors_rural: int = 2
    zero_visitor_fraction: float = 0.18
    visit_points_per_visitor: int = 3

    raster_cellsize_deg: float = 0.027  # ~3 km per pixel
    raster_background: float = 0.5
    raster_nodata: float = -9999.0
    big_city_brightness: float = 120.0
    small_city_brightness: float = 25.0
    big_city_sigma_deg: float = 0.04
    small_city_sigma_deg: float = 0.02

    manifest_hourly: str = "epoch"      # "epoch" | "all" | "none"

    @property
    def window(self) -> ObservationWindow:
        start = datetime.combine(self.window_start, time())
        return ObservationWindow(start, start + timedelta(days=self.n_days))

    @property
    def n_epoch_sites(self) -> int:
        return self.n_big_cities + self.n_small_cities + self.n_rural_epoch_sites

    @property
    def n_epochs(self) -> int:
        return self.n_epoch_sites + self.n_double_fire_sites

    def validate(self) -> None:
        if self.mode not in ("deterministic", "stochastic"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.manifest_hourly not in ("epoch", "all", "none"):
            raise ConfigError(f"unknown manifest_hourly {self.manifest_hourly!r}")
        for name in ("n_antennas", "n_days", "missing_hours", "users_per_period",
                     "visit_points_per_visitor"):
            if getattr(self, name) < 0 or (name != "missing_hours"
                                           and getattr(self, name) == 0):
                raise ConfigError(f"{name} must be positive")
        city_antennas = (self.n_big_cities * self.antennas_per_big_city
                         + self.n_small_cities * self.antennas_per_small_city)
        n_rural = self.n_antennas - city_antennas
        if n_rural < self.n_rural_epoch_sites:
            raise ConfigError(
                f"only {n_rural} rural antennas but "
                f"{self.n_rural_epoch_sites} rural fire sites requested")
        if self.n_double_fire_sites > self.n_rural_epoch_sites:
            raise ConfigError("double-fire sites must be rural fire sites")
        if self.n_fires and self.n_fires < self.n_epochs:
            raise ConfigError(
                f"n_fires={self.n_fires} below the {self.n_epochs} planted fires")
        if not (0 <= self.fire_day_min <= self.fire_day_max):
            raise ConfigError("bad fire day range")
        if self.n_fires and self.fire_day_max + self.n_double_fire_sites_gap() \
                + 3 >= self.n_days:
            raise ConfigError("fire day range leaves no room for epoch windows")
        if not 0.0 <= self.zero_visitor_fraction <= 1.0:
            raise ConfigError("zero_visitor_fraction must be in [0, 1]")
        min_lat, max_lat, min_lon, max_lon = ANTENNA_ZONE
        if not (RASTER_LAT[0] < min_lat and max_lat < RASTER_LAT[1]
                and RASTER_LON[0] < min_lon and max_lon < RASTER_LON[1]):
            raise ConfigError("antenna zone outside raster extent")

    def n_double_fire_sites_gap(self) -> int:
        return 14       # max spacing of a second fire after the first

    def to_jsonable(self) -> Dict:
        out: Dict = {}
        for f in dc_fields(self):
            v = getattr(self, f.name)
            if isinstance(v, date):
                v = v.isoformat()
            elif isinstance(v, tuple):
                v = [x.isoformat() if isinstance(x, date) else x for x in v]
            out[f.name] = v
        return out

    @classmethod
    def from_mapping(cls, mapping: Dict[str, str]) -> "SynthConfig":
        """Build a config from string key-value pairs (the CLI config file
        format). Unknown keys raise; list values are comma-separated."""
        kwargs: Dict = {}
        by_name = {f.name: f for f in dc_fields(cls)}
        for key, raw in mapping.items():
            if key not in by_name:
                raise ConfigError(f"unknown config key {key!r}")
            f = by_name[key]
            if f.name in ("holiday_dip_days", "spike_days"):
                kwargs[key] = tuple(date.fromisoformat(tok.strip())
                                    for tok in raw.split(",") if tok.strip())
            elif f.name == "window_start":
                kwargs[key] = date.fromisoformat(raw.strip())
            elif f.type == "int":
                kwargs[key] = int(raw)
            elif f.type == "float":
                kwargs[key] = float(raw)
            else:
                kwargs[key] = raw.strip()
        return cls(**kwargs)


@dataclass
class _Site:
    antenna_id: int
    position: GeoPoint
    tier: str


def _offset_point(p: GeoPoint, dist_km: float, bearing_rad: float) -> GeoPoint:
    dlat = dist_km * math.cos(bearing_rad) / KM_PER_DEG_LAT
    coslat = max(math.cos(math.radians(p.lat)), 1e-9)
    dlon = dist_km * math.sin(bearing_rad) / (KM_PER_DEG_LAT * coslat)
    return GeoPoint(p.lat + dlat, p.lon + dlon)


def _sample_city_centers(rng: np.random.Generator,
                         cfg: SynthConfig) -> Tuple[List[GeoPoint], List[GeoPoint]]:
    min_lat, max_lat, min_lon, max_lon = ANTENNA_ZONE
    lo_lat, hi_lat = min_lat + CITY_MARGIN, max_lat - CITY_MARGIN
    lo_lon, hi_lon = min_lon + CITY_MARGIN, max_lon - CITY_MARGIN

    def sample(n: int, existing: List[GeoPoint], min_sep: float) -> List[GeoPoint]:
        out: List[GeoPoint] = []
        attempts = 0
        while len(out) < n:
            attempts += 1
            if attempts > 20000:
                raise ConfigError("cannot place city centers with requested "
                                  "separation; reduce city counts")
            lat = lo_lat + (hi_lat - lo_lat) * rng.random()
            lon = lo_lon + (hi_lon - lo_lon) * rng.random()
            ok = all(max(abs(lat - c.lat), abs(lon - c.lon)) >= min_sep
                     for c in existing + out)
            if ok:
                out.append(GeoPoint(lat, lon))
        return out

    big = sample(cfg.n_big_cities, [], BIG_CITY_MIN_SEP)
    small = sample(cfg.n_small_cities, big, CITY_MIN_SEP)
    return big, small


def _place_antennas(rng: np.random.Generator, cfg: SynthConfig,
                    big_centers: List[GeoPoint],
                    small_centers: List[GeoPoint]) -> List[_Site]:
    sites: List[_Site] = []
    next_id = 1

    def city_ring(center: GeoPoint, count: int, tier: str):
        nonlocal next_id
        phase = 2.0 * math.pi * rng.random()
        sites.append(_Site(next_id, center, tier))
        next_id += 1
        for j in range(count - 1):
            # Rings at 2.5 / 5.0 km; only the center antenna ever hosts a
            # planted fire, so ring spacing is free.
            radius = 2.5 + 2.5 * (j // 8)
            angle = phase + 2.0 * math.pi * (j % 8) / 8.0 + 0.2 * (j // 8)
            sites.append(_Site(next_id, _offset_point(center, radius, angle),
                               tier))
            next_id += 1

    for c in big_centers:
        city_ring(c, cfg.antennas_per_big_city, "BIG_CITY")
    for c in small_centers:
        city_ring(c, cfg.antennas_per_small_city, "SMALL_CITY")

    n_rural = cfg.n_antennas - (next_id - 1)
    min_lat, max_lat, min_lon, max_lon = ANTENNA_ZONE
    cell_deg = RURAL_MIN_SPACING_KM / KM_PER_DEG_LAT
    occupied: Dict[Tuple[int, int], List[GeoPoint]] = {}
    centers = big_centers + small_centers
    placed = 0
    attempts = 0
    while placed < n_rural:
        attempts += 1
        if attempts > 200 * max(n_rural, 1):
            raise ConfigError("cannot place rural antennas; zone too crowded")
        lat = min_lat + (max_lat - min_lat) * rng.random()
        lon = min_lon + (max_lon - min_lon) * rng.random()
        p = GeoPoint(lat, lon)
        if any(haversine_km(p, c) < RURAL_CITY_CLEARANCE_KM for c in centers):
            continue
        ci = math.floor(lat / cell_deg)
        cj = math.floor(lon / cell_deg)
        clash = False
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for q in occupied.get((ci + di, cj + dj), ()):
                    if haversine_km(p, q) < RURAL_MIN_SPACING_KM:
                        clash = True
                        break
        if clash:
            continue
        occupied.setdefault((ci, cj), []).append(p)
        sites.append(_Site(next_id, p, "RURAL"))
        next_id += 1
        placed += 1
    return sites


def _build_raster(cfg: SynthConfig, big_centers: List[GeoPoint],
                  small_centers: List[GeoPoint]) -> LightRaster:
    cs = cfg.raster_cellsize_deg
    nrows = int(round((RASTER_LAT[1] - RASTER_LAT[0]) / cs))
    ncols = int(round((RASTER_LON[1] - RASTER_LON[0]) / cs))
    lat0, lon0 = RASTER_LAT[0], RASTER_LON[0]
    lat_c = lat0 + (np.arange(nrows) + 0.5) * cs
    lon_c = lon0 + (np.arange(ncols) + 0.5) * cs
    lat_g = lat_c[:, None]
    lon_g = lon_c[None, :]
    values = np.full((nrows, ncols), cfg.raster_background, dtype=np.float64)
    for centers, brightness, sigma in (
            (big_centers, cfg.big_city_brightness, cfg.big_city_sigma_deg),
            (small_centers, cfg.small_city_brightness, cfg.small_city_sigma_deg)):
        for c in centers:
            d2 = (lat_g - c.lat) ** 2 + (lon_g - c.lon) ** 2
            values += brightness * np.exp(-d2 / (2.0 * sigma * sigma))
    # A nodata block in the far south-west corner, well clear of every
    # antenna's 7.5 km disk.
    values[:4, :4] = cfg.raster_nodata
    return LightRaster(ncols=ncols, nrows=nrows, origin=GeoPoint(lat0, lon0),
                       cellsize_deg=cs, nodata=cfg.raster_nodata, values=values)


@dataclass
class _Epoch:
    antenna_id: int
    tier: str
    fire_day_index: int
    fire_position: GeoPoint
    distance_km: float
    n_visitors: int = 0
    visitor_ids: List[int] = field(default_factory=list)


def _plant_fires(rng: np.random.Generator, cfg: SynthConfig,
                 sites: List[_Site]) -> List[_Epoch]:
    by_tier: Dict[str, List[_Site]] = {t: [] for t in TIERS}
    # Epoch sites: city center antennas (first of each city block) and the
    # first rural antennas, in id order.
    idx = 0
    for _ in range(cfg.n_big_cities):
        by_tier["BIG_CITY"].append(sites[idx])
        idx += cfg.antennas_per_big_city
    for _ in range(cfg.n_small_cities):
        by_tier["SMALL_CITY"].append(sites[idx])
        idx += cfg.antennas_per_small_city
    rural = [s for s in sites if s.tier == "RURAL"]
    by_tier["RURAL"] = rural[:cfg.n_rural_epoch_sites]

    epochs: List[_Epoch] = []

    def add_fire(site: _Site, day_index: int):
        dist = 0.25 + 0.65 * rng.random()
        bearing = 2.0 * math.pi * rng.random()
        pos = _offset_point(site.position, dist, bearing)
        epochs.append(_Epoch(site.antenna_id, site.tier, day_index, pos,
                             haversine_km(site.position, pos)))

    ordered = (by_tier["BIG_CITY"] + by_tier["SMALL_CITY"] + by_tier["RURAL"])
    first_day: Dict[int, int] = {}
    for site in ordered:
        day = int(rng.integers(cfg.fire_day_min, cfg.fire_day_max + 1))
        first_day[site.antenna_id] = day
        add_fire(site, day)
    # Second fires for the first n_double_fire_sites rural epoch sites,
    # at least 7 days after the first so the two 5-day windows never
    # interact.
    for site in by_tier["RURAL"][:cfg.n_double_fire_sites]:
        day2 = first_day[site.antenna_id] + 7 + int(rng.integers(0, 8))
        add_fire(site, day2)
    return epochs


def _day_factor(cfg: SynthConfig, d: date) -> float:
    f = (1.0 + cfg.monthly_decay) ** (d.day - 1)
    if d in cfg.holiday_dip_days:
        f *= cfg.holiday_dip_factor
    if d in cfg.spike_days:
        f *= cfg.spike_factor
    return f


def _fire_shapes(cfg: SynthConfig) -> Dict[str, Tuple[float, ...]]:
    base = list(map(float, BASE_SHAPE))
    rural = base[:]
    for h in MORNING:
        rural[h] = base[h] * cfg.inversion_magnitude
    for i, h in enumerate(EVENING):
        rural[h] = EVENING_INVERTED[i]
    small = base[:]
    for h in MORNING:
        small[h] = base[h] * cfg.small_city_morning_boost
    big = [v * cfg.big_city_reduction for v in base]
    return {"RURAL": tuple(rural), "SMALL_CITY": tuple(small),
            "BIG_CITY": tuple(big)}


def _choose_missing_hours(rng: np.random.Generator, cfg: SynthConfig,
                          epochs: List[_Epoch]) -> List[int]:
    """Missing hours are planted strictly after every epoch window so the
    sharp epoch oracle is unaffected; the masking machinery gets its own
    dedicated tests."""
    if cfg.missing_hours == 0:
        return []
    last_window_day = max((e.fire_day_index for e in epochs), default=-3) + 2
    first_free_hour = (last_window_day + 1) * 24
    pool = np.arange(first_free_hour, cfg.n_days * 24)
    if pool.size < cfg.missing_hours:
        raise ConfigError("not enough fire-free hours to plant the gap; "
                          "lower fire_day_max or missing_hours")
    chosen = rng.choice(pool, size=cfg.missing_hours, replace=False)
    return sorted(int(h) for h in chosen)


def generate(cfg: SynthConfig, out_dir: str) -> Dict:
    """Emit the five input files plus manifest.json into out_dir; returns
    the manifest. Byte-identical for identical (config, seed)."""
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    window = cfg.window
    n_hours = window.n_hours

    big_centers, small_centers = _sample_city_centers(rng, cfg)
    sites = _place_antennas(rng, cfg, big_centers, small_centers)
    raster = _build_raster(cfg, big_centers, small_centers)
    epochs = _plant_fires(rng, cfg, sites) if cfg.n_fires else []
    missing = _choose_missing_hours(rng, cfg, epochs)
    missing_set = set(missing)

    # ---- antennas.csv -------------------------------------------------
    with open(os.path.join(out_dir, "antennas.csv"), "w", encoding="utf-8",
              newline="\n") as f:
        for s in sites:
            f.write(f"{s.antenna_id},{s.position.lon!r},{s.position.lat!r}\n")

    # ---- lights.asc ---------------------------------------------------
    from .ingest import write_raster
    with open(os.path.join(out_dir, "lights.asc"), "w", encoding="utf-8",
              newline="\n") as f:
        write_raster(raster, f)

    # ---- fires.csv ----------------------------------------------------
    n_bulk = max(0, cfg.n_fires - len(epochs))
    bulk_lat = BULK_FIRE_ZONE[0] + (BULK_FIRE_ZONE[1] - BULK_FIRE_ZONE[0]) \
        * rng.random(n_bulk)
    bulk_lon = BULK_FIRE_ZONE[2] + (BULK_FIRE_ZONE[3] - BULK_FIRE_ZONE[2]) \
        * rng.random(n_bulk)
    bulk_day = rng.integers(0, cfg.n_days, size=n_bulk)
    fire_rows: List[Tuple[int, float, float]] = \
        [(e.fire_day_index, e.fire_position.lat, e.fire_position.lon)
         for e in epochs]
    fire_rows.extend(zip(bulk_day.tolist(), bulk_lat.tolist(),
                         bulk_lon.tolist()))
    fire_rows.sort()
    acq_minutes = rng.integers(0, 24 * 60, size=len(fire_rows))
    confid = rng.integers(30, 101, size=len(fire_rows))
    with open(os.path.join(out_dir, "fires.csv"), "w", encoding="utf-8",
              newline="\n") as f:
        f.write("latitude,longitude,acq_date,acq_time,confidence\n")
        d0 = cfg.window_start
        for (dayi, lat, lon), m, c in zip(fire_rows, acq_minutes.tolist(),
                                          confid.tolist()):
            d = d0 + timedelta(days=int(dayi))
            hhmm = (m // 60) * 100 + m % 60
            f.write(f"{lat!r},{lon!r},{d.isoformat()},{hhmm:04d},{c}\n")

    # ---- traffic.csv + expected tables --------------------------------
    amp_by_tier = {"BIG_CITY": cfg.amp_big, "SMALL_CITY": cfg.amp_small,
                   "RURAL": cfg.amp_rural}
    amps = np.array([amp_by_tier[s.tier] for s in sites])
    ids = [s.antenna_id for s in sites]
    fire_shapes = _fire_shapes(cfg)
    # day index -> [(site array index, tier), ...] under post-fire behavior
    affected: Dict[int, List[Tuple[int, str]]] = {}
    site_index = {s.antenna_id: i for i, s in enumerate(sites)}
    for e in epochs:
        for k in range(1, cfg.inversion_duration_days + 1):
            affected.setdefault(e.fire_day_index + k, []).append(
                (site_index[e.antenna_id], e.tier))

    track = cfg.manifest_hourly
    if track == "all":
        tracked = list(range(len(sites)))
    elif track == "epoch":
        tracked = sorted({site_index[e.antenna_id] for e in epochs})
    else:
        tracked = []
    tracked_pos = {si: j for j, si in enumerate(tracked)}
    tracked_arr = np.array(tracked, dtype=np.int64)
    expected_tables = np.zeros((len(tracked), n_hours), dtype=np.float64)
    expected_daily = np.zeros(cfg.n_days, dtype=np.float64)

    stochastic = cfg.mode == "stochastic"
    with open(os.path.join(out_dir, "traffic.csv"), "w", encoding="utf-8",
              newline="\n") as f:
        for dayi in range(cfg.n_days):
            d = cfg.window_start + timedelta(days=dayi)
            fday = _day_factor(cfg, d)
            mods = affected.get(dayi, ())
            day_str = d.isoformat()
            for hod in range(24):
                h = dayi * 24 + hod
                counts = amps * (BASE_SHAPE[hod] * fday)
                for si, tier in mods:
                    counts[si] = amps[si] * fire_shapes[tier][hod] * fday
                if tracked_arr.size:
                    expected_tables[:, h] = counts[tracked_arr]
                if h in missing_set:
                    continue
                expected_daily[dayi] += counts.sum()
                ts = f"{day_str}T{hod:02d}:00:00"
                if stochastic:
                    drawn = rng.poisson(counts)
                    lines = [f"{ts},{aid},{aid},{n},{n * cfg.duration_factor!r}"
                             for aid, n in zip(ids, drawn.tolist())]
                else:
                    dur = cfg.duration_factor
                    lines = [f"{ts},{aid},{aid},{n!r},{n * dur!r}"
                             for aid, n in zip(ids, counts.tolist())]
                f.write("\n".join(lines))
                f.write("\n")

    # ---- trajectories.csv ---------------------------------------------
    epochs_sorted = sorted(range(len(epochs)),
                           key=lambda i: (epochs[i].antenna_id,
                                          epochs[i].fire_day_index))
    n_zero = int(round(cfg.zero_visitor_fraction * len(epochs)))
    rural_epoch_idx = [i for i in epochs_sorted if epochs[i].tier == "RURAL"]
    if n_zero > len(rural_epoch_idx):
        raise ConfigError("zero_visitor_fraction too high for the planted "
                          "rural epoch count")
    zero_idx = set(int(i) for i in rng.choice(rural_epoch_idx, size=n_zero,
                                              replace=False)) if n_zero else set()
    visitors_by_tier = {"BIG_CITY": cfg.visitors_big,
                        "SMALL_CITY": cfg.visitors_small,
                        "RURAL": cfg.visitors_rural}
    epoch_antenna_ids = {e.antenna_id for e in epochs}
    non_epoch_antennas = [s.antenna_id for s in sites
                          if s.antenna_id not in epoch_antenna_ids]
    traj_rows: List[Tuple[datetime, int, int]] = []
    for i in epochs_sorted:
        e = epochs[i]
        if i in zero_idx:
            e.n_visitors = 0
            continue
        n_vis = visitors_by_tier[e.tier]
        e.n_visitors = n_vis
        users = rng.choice(cfg.users_per_period, size=n_vis, replace=False) + 1
        e.visitor_ids = sorted(int(u) for u in users)
        d = cfg.window_start + timedelta(days=e.fire_day_index)
        day_start = datetime.combine(d, time())
        for vi, uid in enumerate(e.visitor_ids):
            wander = [int(a) for a in rng.choice(len(non_epoch_antennas),
                                                 size=2)]
            before = day_start + timedelta(minutes=8 * 60 + 3 * vi)
            after = day_start + timedelta(minutes=20 * 60 + 3 * vi)
            traj_rows.append((before, uid, non_epoch_antennas[wander[0]]))
            for k in range(cfg.visit_points_per_visitor):
                t = day_start + timedelta(minutes=10 * 60 + 7 * vi + 45 * k)
                traj_rows.append((t, uid, e.antenna_id))
            traj_rows.append((after, uid, non_epoch_antennas[wander[1]]))

    n_periods = (cfg.n_days + 13) // 14
    for p in range(n_periods):
        days_in = min(14, cfg.n_days - p * 14)
        n_bg = int(round(cfg.users_per_period * days_in
                         * cfg.background_pings_per_user_day))
        if n_bg == 0 or not non_epoch_antennas:
            continue
        users = rng.integers(1, cfg.users_per_period + 1, size=n_bg)
        day_off = rng.integers(0, days_in, size=n_bg)
        minutes = rng.integers(0, 24 * 60, size=n_bg)
        ant_idx = rng.integers(0, len(non_epoch_antennas), size=n_bg)
        base_day = cfg.window_start + timedelta(days=p * 14)
        base_dt = datetime.combine(base_day, time())
        for u, do, m, ai in zip(users.tolist(), day_off.tolist(),
                                minutes.tolist(), ant_idx.tolist()):
            traj_rows.append((base_dt + timedelta(days=do, minutes=m),
                              u, non_epoch_antennas[ai]))

    traj_rows.sort()
    with open(os.path.join(out_dir, "trajectories.csv"), "w", encoding="utf-8",
              newline="\n") as f:
        for ts, uid, aid in traj_rows:
            f.write(f"{uid},{ts.isoformat(timespec='seconds')},{aid}\n")

    # ---- manifest ------------------------------------------------------
    n_epochs = len(epochs)
    zero_frac = (n_zero / n_epochs) if n_epochs else 0.0
    per_tier_sum: Dict[str, int] = {t: 0 for t in TIERS}
    per_tier_n: Dict[str, int] = {t: 0 for t in TIERS}
    for e in epochs:
        per_tier_sum[e.tier] += e.n_visitors
        per_tier_n[e.tier] += 1
    fires_per_antenna: Dict[int, int] = {}
    for e in epochs:
        fires_per_antenna[e.antenna_id] = fires_per_antenna.get(e.antenna_id,
                                                                0) + 1
    hist: Dict[str, int] = {}
    for c in fires_per_antenna.values():
        hist[str(c)] = hist.get(str(c), 0) + 1

    manifest: Dict = {
        "schema_version": 1,
        "rng": "numpy default_rng (PCG64, 64-bit)",
        "config": cfg.to_jsonable(),
        "window": {"start": window.start.isoformat(),
                   "end": window.end.isoformat(),
                   "n_hours": n_hours},
        "missing_hour_indices": missing,
        "missing_hours": [window.hour_at(h).isoformat() for h in missing],
        "antenna_tiers": {str(s.antenna_id): s.tier for s in sites},
        "epoch_sites": {
            "BIG_CITY": [s.antenna_id for s in sites
                         if s.tier == "BIG_CITY"
                         and any(e.antenna_id == s.antenna_id for e in epochs)],
            "SMALL_CITY": [s.antenna_id for s in sites
                           if s.tier == "SMALL_CITY"
                           and any(e.antenna_id == s.antenna_id for e in epochs)],
            "RURAL": [s.antenna_id for s in sites
                      if s.tier == "RURAL"
                      and any(e.antenna_id == s.antenna_id for e in epochs)],
        },
        "epochs": [
            {"antenna_id": e.antenna_id,
             "fire_date": (cfg.window_start
                           + timedelta(days=e.fire_day_index)).isoformat(),
             "distance_km": e.distance_km,
             "tier": e.tier,
             "n_visitors": e.n_visitors,
             "visitor_ids": e.visitor_ids}
            for i, e in ((i, epochs[i]) for i in epochs_sorted)
        ],
        "join": {"n_antennas_with_fire": len(fires_per_antenna),
                 "histogram": hist,
                 "n_pairs": n_epochs},
        "behavior": {
            "base_shape": list(BASE_SHAPE),
            "fire_shapes": {t: list(v) for t, v in _fire_shapes(cfg).items()},
            "monthly_decay": cfg.monthly_decay,
            "holiday_dip_days": [d.isoformat() for d in cfg.holiday_dip_days],
            "holiday_dip_factor": cfg.holiday_dip_factor,
            "spike_days": [d.isoformat() for d in cfg.spike_days],
            "spike_factor": cfg.spike_factor,
            "inversion_magnitude": cfg.inversion_magnitude,
            "small_city_morning_boost": cfg.small_city_morning_boost,
            "big_city_reduction": cfg.big_city_reduction,
        },
        "expected_hourly_counts": {
            str(sites[si].antenna_id): expected_tables[j].tolist()
            for si, j in tracked_pos.items()
        },
        "expected_daily_totals": expected_daily.tolist(),
        "zero_visitor_fraction": zero_frac,
        "n_zero_visitor_epochs": n_zero,
        "expected_visitors_by_cluster": {
            t: (per_tier_sum[t] / per_tier_n[t])
            for t in TIERS if per_tier_n[t]
        },
    }
    with open(os.path.join(out_dir, "manifest.json"), "w",
              encoding="utf-8", newline="\n") as f:
        f.write(canonical_dumps(manifest))
        f.write("\n")
    return manifest
