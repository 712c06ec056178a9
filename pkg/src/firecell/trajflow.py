"""Trajectory filtering and counting around fire sites.

"Passed by" means at least one trajectory point logged AT the fire antenna
on the fire calendar day; passage is by antenna identity, not proximity.
Visitor identity is the composite (two-week period index, user id) because
user identifiers rotate every period.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date
from typing import Dict, Iterable, List, Set, Tuple

from .fusion import FireSitePair
from .ingest import ObservationWindow, TrajectoryPoint, period_index
from .lightclass import ClusterModel, SiteClass

Visitor = Tuple[int, int]       # (period_index, user_id)


class TrajectoryIndex:
    """Immutable (antenna, day) -> points index shared by all epoch filters."""

    def __init__(self, points: Iterable[TrajectoryPoint],
                 window: ObservationWindow):
        self.window = window
        self.n_points = 0
        buckets: Dict[Tuple[int, date], List[TrajectoryPoint]] = defaultdict(list)
        for pt in points:
            buckets[(pt.antenna_id, pt.timestamp.date())].append(pt)
            self.n_points += 1
        self._buckets = dict(buckets)

    def points_at(self, antenna_id: int, day: date) -> List[TrajectoryPoint]:
        return self._buckets.get((antenna_id, day), [])


@dataclass(frozen=True)
class EpochVisitors:
    pair: FireSitePair
    visitors: frozenset  # of Visitor
    points: Tuple[TrajectoryPoint, ...]     # at the fire antenna, fire day


def visitors_on_fire_day(index: TrajectoryIndex,
                         pair: FireSitePair) -> EpochVisitors:
    """Who logged at the fire antenna on the fire day, deduplicated by
    composite identity. Points are returned in timestamp order."""
    pts = sorted(index.points_at(pair.antenna_id, pair.fire.day),
                 key=lambda p: (p.timestamp, p.user_id))
    visitors = frozenset(
        (period_index(index.window, p.timestamp), p.user_id) for p in pts)
    return EpochVisitors(pair, visitors, tuple(pts))


def collect_epoch_visitors(index: TrajectoryIndex,
                           pairs: Iterable[FireSitePair]) -> List[EpochVisitors]:
    return [visitors_on_fire_day(index, p) for p in pairs]


def zero_visitor_fraction(epochs: Iterable[EpochVisitors]) -> float:
    """Share of epochs whose antenna logged no trajectory on the fire day."""
    epoch_list = list(epochs)
    if not epoch_list:
        raise ValueError("no epochs")
    empty = sum(1 for e in epoch_list if not e.visitors)
    return empty / len(epoch_list)


def zero_visitor_antenna_fraction(epochs: Iterable[EpochVisitors]) -> float:
    """Same numerator idea but over distinct antennas: an antenna counts as
    zero-visitor only if ALL of its epochs are empty. Reported alongside the
    per-epoch fraction because the denominator choice is ambiguous in
    practice."""
    by_antenna: Dict[int, bool] = {}
    for e in epochs:
        aid = e.pair.antenna_id
        by_antenna[aid] = by_antenna.get(aid, True) and not e.visitors
    if not by_antenna:
        raise ValueError("no epochs")
    return sum(by_antenna.values()) / len(by_antenna)


@dataclass(frozen=True)
class ClusterVisitorStats:
    label: SiteClass
    mean_visitors: float
    n_epochs: int


def visitors_by_cluster(epochs: Iterable[EpochVisitors],
                        model: ClusterModel) -> Dict[SiteClass, ClusterVisitorStats]:
    """Mean visitor count per cluster label. Labels with no epochs are
    absent from the result, not zero."""
    sums: Dict[SiteClass, int] = defaultdict(int)
    counts: Dict[SiteClass, int] = defaultdict(int)
    for e in epochs:
        aid = e.pair.antenna_id
        if aid not in model.assignment:
            raise ValueError(f"antenna {aid} has no cluster label")
        label = model.label_of(aid)
        sums[label] += len(e.visitors)
        counts[label] += 1
    return {
        label: ClusterVisitorStats(label, sums[label] / counts[label],
                                   counts[label])
        for label in counts
    }
