"""Event-aligned analysis of hourly call activity around fires.

Per-antenna hourly series, 5-day window normalization, fire-relative
alignment and per-cluster averaging, morning/evening peak metrics, and
daily aggregation exposing the long-term confounds (monthly decay,
holiday dips, activity spikes).

Missing hours are masked, never zero-filled: zero-filling would fabricate
activity drops around the gaps in the source data.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .fusion import FireSitePair
from .ingest import ObservationWindow, Timeline, TrafficRecord
from .lightclass import ClusterModel, SiteClass

# Fire-relative hour offsets: -60 .. +59, offset 0 = 12:00 of the fire day.
# The 120 offsets exactly cover calendar days D-2 .. D+2.
OFFSET_LO = -60
OFFSET_HI = 59
N_OFFSETS = 120

# Local-hour bounds of the two daily activity peaks (inclusive). The peaks
# are a known feature of the data; the exact bounds are this toolkit's
# convention and are configurable in peak_ratios.
MORNING_HOURS = (6, 12)
EVENING_HOURS = (16, 22)


class Direction(Enum):
    ORIGINATING = "ORIGINATING"
    TERMINATING = "TERMINATING"
    BOTH = "BOTH"


class DegenerateEpochError(Exception):
    """The 5-day window has no usable maximum (all missing or max == 0)."""


def offset_day(offset: int) -> int:
    """Calendar-day index (-2..+2) of a fire-relative hour offset."""
    return (offset + 12) // 24


def offset_local_hour(offset: int) -> int:
    """Local hour of day (0..23) of a fire-relative hour offset."""
    return (offset + 12) % 24


def day_offsets(day: int) -> range:
    """The 24 hour offsets belonging to fire-relative day ``day``."""
    lo = day * 24 - 12
    return range(lo, lo + 24)


class TrafficData:
    """Single-pass aggregation of a traffic stream into per-antenna,
    per-hour call counts. Memory is O(antennas x hours), independent of the
    number of input rows.

    A record contributes to its origin's ORIGINATING series and its
    destination's TERMINATING series; BOTH counts each record once per
    antenna it touches (a self-record touches its antenna once).
    """

    def __init__(self, antenna_ids: Sequence[int], window: ObservationWindow):
        self.window = window
        self.antenna_ids = list(antenna_ids)
        self._index = {aid: i for i, aid in enumerate(self.antenna_ids)}
        n = len(self.antenna_ids)
        h = window.n_hours
        self.orig = np.zeros((n, h), dtype=np.float64)
        self.term = np.zeros((n, h), dtype=np.float64)
        self.both = np.zeros((n, h), dtype=np.float64)
        self.timeline: Timeline = Timeline(window, np.zeros(h, dtype=bool))
        self.unknown_antenna_rows = 0

    @classmethod
    def from_stream(cls, stream, antenna_ids: Sequence[int],
                    window: ObservationWindow) -> "TrafficData":
        """Consume a TrafficStream (or any TrafficRecord iterable)."""
        data = cls(antenna_ids, window)
        idx = data._index
        hour_index = window.hour_index
        orig, term, both = data.orig, data.term, data.both
        for rec in stream:
            h = hour_index(rec.hour)
            o = idx.get(rec.origin_antenna)
            d = idx.get(rec.dest_antenna)
            if o is None and d is None:
                data.unknown_antenna_rows += 1
                continue
            if o is not None:
                orig[o, h] += rec.n_calls
                both[o, h] += rec.n_calls
            if d is not None:
                term[d, h] += rec.n_calls
                if d != o:
                    both[d, h] += rec.n_calls
        if hasattr(stream, "timeline"):
            data.timeline = stream.timeline
        else:
            # Raw record iterables carry no gap information; every hour
            # with any record counts as present.
            seen = np.zeros(window.n_hours, dtype=bool)
            seen[np.flatnonzero((orig.sum(axis=0) > 0) | (term.sum(axis=0) > 0))] = True
            data.timeline = Timeline(window, seen)
        return data

    def has_antenna(self, antenna_id: int) -> bool:
        return antenna_id in self._index

    def counts(self, antenna_id: int, direction: Direction) -> np.ndarray:
        i = self._index[antenna_id]
        if direction is Direction.ORIGINATING:
            return self.orig[i]
        if direction is Direction.TERMINATING:
            return self.term[i]
        return self.both[i]


@dataclass(frozen=True)
class HourlySeries:
    antenna_id: int
    direction: Direction
    window: ObservationWindow
    values: np.ndarray = field(repr=False)      # per-hour counts
    mask: np.ndarray = field(repr=False)        # True where the hour is present

    def __post_init__(self):
        if self.values.shape != (self.window.n_hours,):
            raise ValueError("series length != window hours")
        if self.mask.shape != self.values.shape:
            raise ValueError("mask length != series length")


def build_series(traffic: TrafficData, antenna_id: int,
                 direction: Direction) -> HourlySeries:
    """Hourly call counts for one antenna. Hours absent from the Timeline
    are masked missing, NOT zero. An unknown antenna yields an all-missing
    series."""
    window = traffic.window
    if not traffic.has_antenna(antenna_id):
        return HourlySeries(antenna_id, direction, window,
                            np.zeros(window.n_hours),
                            np.zeros(window.n_hours, dtype=bool))
    values = traffic.counts(antenna_id, direction).copy()
    mask = traffic.timeline.present.copy()
    values[~mask] = 0.0
    return HourlySeries(antenna_id, direction, window, values, mask)


@dataclass(frozen=True)
class EpochWindow:
    """One normalized 5-day window on the fire-relative axis."""

    antenna_id: int
    fire_day: date
    values: np.ndarray = field(repr=False)      # length 120, 0 where masked
    mask: np.ndarray = field(repr=False)        # length 120


def _window_hour_indices(window: ObservationWindow, fire_day: date) -> np.ndarray:
    """Observation-window hour index for each of the 120 offsets; -1 where
    the offset falls outside the observation window (epoch truncation)."""
    day0 = window.day_index(fire_day)
    base = day0 * 24 + 12       # hour index of 12:00 on the fire day
    idx = base + np.arange(OFFSET_LO, OFFSET_HI + 1)
    idx[(idx < 0) | (idx >= window.n_hours)] = -1
    return idx


def normalize_window(series: HourlySeries, fire_day: date) -> EpochWindow:
    """Normalize the 5-day window [fire_day-2, fire_day+2] by its maximum
    over PRESENT hours. The attained maximum maps to exactly 1.0; missing
    hours stay missing; offsets outside the observation window contribute
    nothing (truncation, not exclusion).

    Raises DegenerateEpochError when every hour is missing or the window
    maximum is 0; callers count such exclusions.
    """
    idx = _window_hour_indices(series.window, fire_day)
    in_window = idx >= 0
    if not in_window.any():
        raise DegenerateEpochError(
            f"window of {fire_day.isoformat()} does not intersect observation")
    safe_idx = np.where(in_window, idx, 0)
    mask = in_window & series.mask[safe_idx]
    if not mask.any():
        raise DegenerateEpochError("all hours missing in 5-day window")
    values = np.where(mask, series.values[safe_idx], 0.0)
    peak = float(values[mask].max())
    if peak <= 0.0:
        raise DegenerateEpochError("window maximum is 0")
    return EpochWindow(series.antenna_id, fire_day, values / peak, mask)


@dataclass(frozen=True)
class AlignedProfile:
    """Mean normalized hourly activity on the fire-relative axis."""

    label: SiteClass
    offsets: np.ndarray = field(repr=False)     # -60 .. +59
    mean: np.ndarray = field(repr=False)        # NaN where n == 0
    n: np.ndarray = field(repr=False)           # contributing epochs per offset

    def day_mean(self, day: int) -> float:
        """Mean of defined per-offset means over one fire-relative day."""
        sel = np.array([o in day_offsets(day) for o in self.offsets])
        vals = self.mean[sel & (self.n > 0)]
        if vals.size == 0:
            raise ValueError(f"no defined offsets on day {day}")
        return float(vals.mean())


@dataclass
class AlignmentResult:
    profiles: Dict[SiteClass, AlignedProfile]
    n_epochs: Dict[SiteClass, int]              # epochs contributing
    n_excluded: Dict[SiteClass, int]            # degenerate epochs dropped
    empty_labels: List[SiteClass]               # labels whose epochs all dropped


def align_and_average(pairs: Iterable[FireSitePair], model: ClusterModel,
                      traffic: TrafficData,
                      direction: Direction = Direction.BOTH) -> AlignmentResult:
    """Normalize each (antenna, fire) epoch, shift it so 12:00 of the fire
    day sits at offset 0, and average per cluster label.

    The reduction is an order-independent sum + count, so the result is
    invariant under permutation of the pair list. Per-antenna normalization
    bounds any one antenna's contribution to a cluster mean by 1/n.
    """
    pair_list = list(pairs)
    for p in pair_list:
        if p.antenna_id not in model.assignment:
            raise ValueError(f"antenna {p.antenna_id} has no cluster label")
    sums: Dict[SiteClass, np.ndarray] = defaultdict(lambda: np.zeros(N_OFFSETS))
    counts: Dict[SiteClass, np.ndarray] = defaultdict(
        lambda: np.zeros(N_OFFSETS, dtype=np.int64))
    n_epochs: Dict[SiteClass, int] = defaultdict(int)
    n_excluded: Dict[SiteClass, int] = defaultdict(int)
    series_cache: Dict[int, HourlySeries] = {}
    for p in pair_list:
        label = model.label_of(p.antenna_id)
        series = series_cache.get(p.antenna_id)
        if series is None:
            series = build_series(traffic, p.antenna_id, direction)
            series_cache[p.antenna_id] = series
        try:
            ep = normalize_window(series, p.fire.day)
        except DegenerateEpochError:
            n_excluded[label] += 1
            continue
        sums[label] += ep.values
        counts[label] += ep.mask
        n_epochs[label] += 1

    offsets = np.arange(OFFSET_LO, OFFSET_HI + 1)
    profiles: Dict[SiteClass, AlignedProfile] = {}
    empty: List[SiteClass] = []
    seen_labels = set(n_epochs) | set(n_excluded)
    for label in seen_labels:
        n = counts[label]
        with np.errstate(invalid="ignore"):
            mean = np.where(n > 0, sums[label] / np.maximum(n, 1), np.nan)
        if n_epochs[label] == 0:
            empty.append(label)
        profiles[label] = AlignedProfile(label, offsets, mean, n)
    return AlignmentResult(profiles, dict(n_epochs), dict(n_excluded), empty)


@dataclass(frozen=True)
class PeakRatio:
    day: int            # fire-relative day, -2 .. +2
    morning: float      # max of mean over the morning hours
    evening: float      # max of mean over the evening hours
    ratio: float        # morning / evening


@dataclass(frozen=True)
class PeakRatios:
    by_day: Dict[int, PeakRatio]    # days with both peaks defined

    @property
    def inversion(self) -> bool:
        """Morning/evening peak inversion the day after the event."""
        before = self.by_day.get(-1)
        after = self.by_day.get(1)
        return (before is not None and after is not None
                and before.ratio < 1.0 and after.ratio > 1.0)


def peak_ratios(profile: AlignedProfile,
                morning: Tuple[int, int] = MORNING_HOURS,
                evening: Tuple[int, int] = EVENING_HOURS) -> PeakRatios:
    """Morning-peak / evening-peak ratio for each fire-relative day.

    A day's ratio is absent when any queried hour has no contributing
    epochs (undefined peak)."""
    by_day: Dict[int, PeakRatio] = {}
    off_index = {int(o): i for i, o in enumerate(profile.offsets)}
    for day in range(-2, 3):
        def peak(lo_hi):
            lo, hi = lo_hi
            vals = []
            for o in day_offsets(day):
                if offset_local_hour(o) < lo or offset_local_hour(o) > hi:
                    continue
                i = off_index[o]
                if profile.n[i] == 0:
                    return None
                vals.append(float(profile.mean[i]))
            return max(vals) if vals else None

        m = peak(morning)
        e = peak(evening)
        if m is None or e is None or e == 0.0:
            continue
        by_day[day] = PeakRatio(day, m, e, m / e)
    return PeakRatios(by_day)


@dataclass(frozen=True)
class DailyTotal:
    day: date
    calls: float
    missing_hours: int      # hours of this day absent from the timeline


def daily_totals(traffic: TrafficData,
                 antenna_ids: Optional[Iterable[int]] = None,
                 direction: Direction = Direction.ORIGINATING) -> List[DailyTotal]:
    """Call volume per calendar day over an antenna set (default: all),
    summed over present hours only; days with gaps are annotated."""
    window = traffic.window
    if antenna_ids is None:
        rows = slice(None)
    else:
        wanted = set(antenna_ids)
        rows = [i for i, aid in enumerate(traffic.antenna_ids) if aid in wanted]
    if direction is Direction.ORIGINATING:
        mat = traffic.orig
    elif direction is Direction.TERMINATING:
        mat = traffic.term
    else:
        mat = traffic.both
    hourly = mat[rows].sum(axis=0)
    present = traffic.timeline.present
    hourly = np.where(present, hourly, 0.0)
    out: List[DailyTotal] = []
    for d in range(window.n_days):
        sl = slice(d * 24, (d + 1) * 24)
        out.append(DailyTotal(
            day=window.day_at(d),
            calls=float(hourly[sl].sum()),
            missing_hours=int((~present[sl]).sum()),
        ))
    return out


@dataclass(frozen=True)
class MonthlyDecay:
    month: str          # "YYYY-MM"
    rate_per_day: float     # multiplicative; -0.02 means -2 %/day
    n_days: int


def fit_monthly_decay(daily: Sequence[DailyTotal],
                      outlier_log_cut: float = 0.15) -> List[MonthlyDecay]:
    """Per-month exponential decay rate via least squares on log(calls).

    Days with missing hours or zero calls are excluded; a single
    outlier-rejection pass drops spike/dip days before the final fit.
    """
    by_month: Dict[str, List[DailyTotal]] = defaultdict(list)
    for t in daily:
        by_month[t.day.strftime("%Y-%m")].append(t)
    out: List[MonthlyDecay] = []
    for month in sorted(by_month):
        pts = [(t.day.day, math.log(t.calls)) for t in by_month[month]
               if t.calls > 0 and t.missing_hours == 0]
        if len(pts) < 3:
            continue
        x = np.array([p[0] for p in pts], dtype=np.float64)
        y = np.array([p[1] for p in pts], dtype=np.float64)
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        keep = np.abs(resid) <= outlier_log_cut
        if keep.sum() >= 3 and keep.sum() < len(pts):
            slope, intercept = np.polyfit(x[keep], y[keep], 1)
        out.append(MonthlyDecay(month, float(math.expm1(slope)), len(pts)))
    return out


def detect_spikes(daily: Sequence[DailyTotal],
                  threshold: float = 1.25,
                  outlier_log_cut: float = 0.15) -> List[date]:
    """Days whose call volume exceeds ``threshold`` times the fitted
    per-month decay trend. Dips (e.g. holidays) are not flagged."""
    by_month: Dict[str, List[DailyTotal]] = defaultdict(list)
    for t in daily:
        by_month[t.day.strftime("%Y-%m")].append(t)
    spikes: List[date] = []
    for month in sorted(by_month):
        pts = [(t, t.day.day, math.log(t.calls)) for t in by_month[month]
               if t.calls > 0 and t.missing_hours == 0]
        if len(pts) < 3:
            continue
        x = np.array([p[1] for p in pts], dtype=np.float64)
        y = np.array([p[2] for p in pts], dtype=np.float64)
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        keep = np.abs(resid) <= outlier_log_cut
        if keep.sum() >= 3 and keep.sum() < len(pts):
            slope, intercept = np.polyfit(x[keep], y[keep], 1)
        for (t, xd, yv) in pts:
            if t.calls > threshold * math.exp(slope * xd + intercept):
                spikes.append(t.day)
    return sorted(spikes)
