"""Spatial join between fire detections and antenna sites.

A fire within the threshold of k antennas produces k pairs: downstream
per-antenna analyses need every affected site. Threshold comparison is
strict (``<``, not ``<=``).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

from .geo import GridIndex
from .ingest import Antenna, FireEvent


@dataclass(frozen=True)
class FireSitePair:
    antenna_id: int
    fire: FireEvent
    distance_km: float


@dataclass(frozen=True)
class JoinSummary:
    n_antennas_with_fire: int
    histogram: Dict[int, int]       # fires-per-antenna -> number of antennas
    n_pairs: int

    def __post_init__(self):
        total = sum(count * n for count, n in self.histogram.items())
        if total != self.n_pairs:
            raise ValueError("join summary histogram inconsistent with n_pairs")


@dataclass(frozen=True)
class JoinResult:
    pairs: List[FireSitePair]
    summary: JoinSummary


def dedupe_fires(fires: Iterable[FireEvent]) -> List[FireEvent]:
    """Collapse exact same-position same-day duplicates (satellite
    re-detections would otherwise double-count epochs). Keeps first
    occurrence order."""
    seen = set()
    out: List[FireEvent] = []
    for f in fires:
        key = (f.position.lat, f.position.lon, f.day)
        if key in seen:
            continue
        seen.add(key)
        out.append(f)
    return out


def join(fires: Iterable[FireEvent], antennas: Iterable[Antenna],
         threshold_km: float = 1.0) -> JoinResult:
    """All (antenna, fire) pairs with haversine distance strictly below
    threshold_km, deterministically ordered by (antenna id, fire date,
    distance)."""
    if threshold_km <= 0:
        raise ValueError("threshold_km must be positive")
    ants = list(antennas)
    index = GridIndex(((a.id, a.position) for a in ants), cell_km=threshold_km)
    pairs: List[FireSitePair] = []
    for fire in dedupe_fires(fires):
        for aid, dist in index.neighbors_within(fire.position, threshold_km,
                                                strict=True):
            pairs.append(FireSitePair(aid, fire, dist))
    pairs.sort(key=lambda p: (p.antenna_id, p.fire.day, p.distance_km,
                              p.fire.position.lat, p.fire.position.lon))
    per_antenna = Counter(p.antenna_id for p in pairs)
    histogram = dict(sorted(Counter(per_antenna.values()).items()))
    summary = JoinSummary(
        n_antennas_with_fire=len(per_antenna),
        histogram=histogram,
        n_pairs=len(pairs),
    )
    return JoinResult(pairs, summary)
