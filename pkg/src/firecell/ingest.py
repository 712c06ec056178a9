"""Streaming parsers for the five input file schemas.

All parsers are single-pass and keep memory independent of the input size.
All timestamps are interpreted as UTC (Cote d'Ivoire civil time is UTC+0,
so no offsets apply anywhere downstream).

Schemas (UTF-8, LF or CRLF):
  antennas.csv      ``antenna_id,lon,lat``                       no header
  traffic.csv       ``timestamp,origin,dest,n_calls,duration``   no header
  trajectories.csv  ``user_id,timestamp,antenna_id``             no header
  fires.csv         header row naming at least
                    ``latitude,longitude,acq_date`` (optionally
                    ``acq_time,confidence``)
  lights.asc        ASCII grid: 6 ``key value`` header lines (ncols, nrows,
                    xllcorner, yllcorner, cellsize, nodata_value), then
                    nrows rows of ncols values, TOP row first.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Dict, Iterable, Iterator, List, Optional, Set, TextIO, Tuple

import numpy as np

from .geo import BoundingBox, GeoPoint, LightRaster


class ParseError(Exception):
    """A located input error. ``line`` is 1-based, 0 when not line-specific."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class Antenna:
    id: int
    position: GeoPoint


@dataclass(frozen=True)
class TrafficRecord:
    hour: datetime          # truncated to the hour
    origin_antenna: int
    dest_antenna: int
    n_calls: float          # non-negative; fractional in synthetic exact mode
    duration: float         # non-negative minutes


@dataclass(frozen=True)
class TrajectoryPoint:
    user_id: int
    timestamp: datetime     # minute resolution
    antenna_id: int


@dataclass(frozen=True)
class FireEvent:
    position: GeoPoint
    day: date
    acq_time: Optional[int] = None      # minute of day
    confidence: Optional[float] = None


@dataclass(frozen=True)
class ObservationWindow:
    """Half-open hourly observation window [start, end)."""

    start: datetime
    end: datetime

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError("window end must be after start")
        if self.start.minute or self.start.second or self.end.minute or self.end.second:
            raise ValueError("window bounds must be whole hours")

    @property
    def n_hours(self) -> int:
        return int((self.end - self.start).total_seconds() // 3600)

    @property
    def n_days(self) -> int:
        return (self.end.date() - self.start.date()).days

    def hour_index(self, ts: datetime) -> int:
        """Index of the hour containing ts; raises if outside the window."""
        if not (self.start <= ts < self.end):
            raise ValueError(f"timestamp {ts.isoformat()} outside window")
        return int((ts - self.start).total_seconds() // 3600)

    def hour_at(self, index: int) -> datetime:
        return self.start + timedelta(hours=index)

    def day_index(self, d: date) -> int:
        return (d - self.start.date()).days

    def day_at(self, index: int) -> date:
        return self.start.date() + timedelta(days=index)


# Window of the canonical scenario: 3600 hours.
DEFAULT_WINDOW = ObservationWindow(datetime(2011, 12, 1), datetime(2012, 4, 29))


@dataclass(frozen=True)
class Timeline:
    """Presence bitmask over the hours of an observation window."""

    window: ObservationWindow
    present: np.ndarray = field(repr=False)     # bool, len == window.n_hours

    def __post_init__(self):
        p = np.asarray(self.present, dtype=bool)
        if p.shape != (self.window.n_hours,):
            raise ValueError("presence mask length != window hours")
        p.setflags(write=False)
        object.__setattr__(self, "present", p)

    @property
    def n_present(self) -> int:
        return int(self.present.sum())

    @property
    def n_missing(self) -> int:
        return self.window.n_hours - self.n_present

    def missing_hours(self) -> List[datetime]:
        return [self.window.hour_at(int(i)) for i in np.flatnonzero(~self.present)]


def _parse_timestamp(raw: str) -> datetime:
    s = raw.strip()
    if s.endswith("Z"):
        s = s[:-1]
    return datetime.fromisoformat(s)


def parse_antennas(stream: Iterable[str]) -> List[Antenna]:
    """Parse ``antenna_id,lon,lat`` rows. Duplicate ids are rejected."""
    out: List[Antenna] = []
    seen: Set[int] = set()
    for lineno, row in enumerate(csv.reader(stream), start=1):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", lineno)
        try:
            aid = int(row[0])
            lon = float(row[1])
            lat = float(row[2])
            pos = GeoPoint(lat, lon)
        except ValueError as e:
            raise ParseError(str(e), lineno) from e
        if aid <= 0:
            raise ParseError(f"antenna id must be positive: {aid}", lineno)
        if aid in seen:
            raise ParseError(f"duplicate antenna id {aid}", lineno)
        seen.add(aid)
        out.append(Antenna(aid, pos))
    return out


class TrafficStream:
    """Single-pass iterator over traffic rows that also builds the Timeline.

    Iterate to exhaustion, then read ``timeline``, ``rows`` and ``skipped``.
    In lenient mode (default) out-of-window rows are skipped and counted;
    strict mode raises. Hour-timestamp strings are cached, so repeated
    timestamps (the common case) avoid re-parsing.
    """

    def __init__(self, stream: Iterable[str], window: ObservationWindow,
                 strict: bool = False):
        self._stream = stream
        self.window = window
        self.strict = strict
        self.rows = 0
        self.skipped = 0
        self._seen = np.zeros(window.n_hours, dtype=bool)
        self._exhausted = False
        self._hour_cache: Dict[str, Tuple[datetime, int]] = {}

    def __iter__(self) -> Iterator[TrafficRecord]:
        cache = self._hour_cache
        for lineno, row in enumerate(csv.reader(self._stream), start=1):
            if not row:
                continue
            if len(row) != 5:
                raise ParseError(f"expected 5 fields, got {len(row)}", lineno)
            self.rows += 1
            key = row[0].strip()
            cached = cache.get(key)
            if cached is None:
                try:
                    ts = _parse_timestamp(key)
                except ValueError as e:
                    raise ParseError(f"bad timestamp {key!r}", lineno) from e
                hour = ts.replace(minute=0, second=0, microsecond=0)
                if not (self.window.start <= hour < self.window.end):
                    if self.strict:
                        raise ParseError(f"timestamp {key} outside window", lineno)
                    cache[key] = (hour, -1)
                    self.skipped += 1
                    continue
                idx = self.window.hour_index(hour)
                cache[key] = (hour, idx)
                cached = (hour, idx)
            hour, idx = cached
            if idx < 0:
                self.skipped += 1
                continue
            try:
                origin = int(row[1])
                dest = int(row[2])
                n_calls = float(row[3])
                duration = float(row[4])
            except ValueError as e:
                raise ParseError(str(e), lineno) from e
            if n_calls < 0 or duration < 0:
                raise ParseError("negative call count or duration", lineno)
            self._seen[idx] = True
            yield TrafficRecord(hour, origin, dest, n_calls, duration)
        self._exhausted = True

    @property
    def timeline(self) -> Timeline:
        if not self._exhausted:
            raise RuntimeError("timeline available only after full iteration")
        return Timeline(self.window, self._seen.copy())


def parse_traffic(stream: Iterable[str], window: ObservationWindow,
                  strict: bool = False) -> TrafficStream:
    """Streaming parse of ``timestamp,origin,dest,n_calls,duration`` rows."""
    return TrafficStream(stream, window, strict=strict)


def parse_trajectories(stream: Iterable[str]) -> Iterator[TrajectoryPoint]:
    """Streaming parse of ``user_id,timestamp,antenna_id`` rows.

    Timestamps are truncated to the minute if seconds are present. Unknown
    antenna ids are NOT an error here; they resolve downstream.
    """
    cache: Dict[str, datetime] = {}
    for lineno, row in enumerate(csv.reader(stream), start=1):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", lineno)
        key = row[1].strip()
        ts = cache.get(key)
        if ts is None:
            try:
                ts = _parse_timestamp(key).replace(second=0, microsecond=0)
            except ValueError as e:
                raise ParseError(f"bad timestamp {key!r}", lineno) from e
            cache[key] = ts
        try:
            uid = int(row[0])
            aid = int(row[2])
        except ValueError as e:
            raise ParseError(str(e), lineno) from e
        yield TrajectoryPoint(uid, ts, aid)


@dataclass
class FireParseResult:
    fires: List[FireEvent]
    dropped: int        # rows outside the bounding box


def parse_fires(stream: Iterable[str], bbox: BoundingBox) -> FireParseResult:
    """Parse a headered fire-detection CSV, keeping rows inside bbox (inclusive)."""
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        return FireParseResult([], 0)
    names = [n.strip().lower() for n in reader.fieldnames]
    for required in ("latitude", "longitude", "acq_date"):
        if required not in names:
            raise ParseError(f"missing mandatory column {required!r}")

    def get(row, key):
        for k, v in row.items():
            if k is not None and k.strip().lower() == key:
                return v
        return None

    fires: List[FireEvent] = []
    dropped = 0
    for lineno, row in enumerate(reader, start=2):
        try:
            lat = float(get(row, "latitude"))
            lon = float(get(row, "longitude"))
            pos = GeoPoint(lat, lon)
            day = date.fromisoformat(get(row, "acq_date").strip())
        except (TypeError, ValueError, AttributeError) as e:
            raise ParseError(str(e), lineno) from e
        if not bbox.contains(pos):
            dropped += 1
            continue
        acq_time = None
        raw_t = get(row, "acq_time")
        if raw_t not in (None, ""):
            try:
                hhmm = int(raw_t)
                acq_time = (hhmm // 100) * 60 + hhmm % 100
            except ValueError as e:
                raise ParseError(f"bad acq_time {raw_t!r}", lineno) from e
        confidence = None
        raw_c = get(row, "confidence")
        if raw_c not in (None, ""):
            try:
                confidence = float(raw_c)
            except ValueError as e:
                raise ParseError(f"bad confidence {raw_c!r}", lineno) from e
        fires.append(FireEvent(pos, day, acq_time, confidence))
    return FireParseResult(fires, dropped)


def parse_raster(stream: Iterable[str]) -> LightRaster:
    """Parse the plain-text ASCII grid format (top data row first)."""
    it = iter(stream)
    header: Dict[str, float] = {}
    expected = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize",
                "nodata_value"]
    for lineno, key in enumerate(expected, start=1):
        try:
            line = next(it)
        except StopIteration:
            raise ParseError(f"missing header line {key!r}", lineno)
        parts = line.split()
        if len(parts) != 2 or parts[0].lower() != key:
            raise ParseError(f"expected header {key!r}, got {line.strip()!r}",
                             lineno)
        try:
            header[key] = float(parts[1])
        except ValueError as e:
            raise ParseError(str(e), lineno) from e
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    rows: List[List[float]] = []
    for lineno, line in enumerate(it, start=7):
        if not line.strip():
            continue
        try:
            vals = [float(tok) for tok in line.split()]
        except ValueError as e:
            raise ParseError(str(e), lineno) from e
        if len(vals) != ncols:
            raise ParseError(f"expected {ncols} values, got {len(vals)}", lineno)
        rows.append(vals)
    if len(rows) != nrows:
        raise ParseError(f"expected {nrows} data rows, got {len(rows)}")
    values = np.array(rows[::-1], dtype=np.float64)     # store south row first
    return LightRaster(
        ncols=ncols,
        nrows=nrows,
        origin=GeoPoint(header["yllcorner"], header["xllcorner"]),
        cellsize_deg=header["cellsize"],
        nodata=header["nodata_value"],
        values=values,
    )


def _fmt(x: float) -> str:
    """Shortest round-trip decimal; integers without the trailing '.0'."""
    if x == math.floor(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def write_raster(r: LightRaster, out: TextIO) -> None:
    """Write the ASCII grid format; parse(write(r)) reproduces r exactly."""
    out.write(f"ncols {r.ncols}\n")
    out.write(f"nrows {r.nrows}\n")
    out.write(f"xllcorner {_fmt(r.origin.lon)}\n")
    out.write(f"yllcorner {_fmt(r.origin.lat)}\n")
    out.write(f"cellsize {_fmt(r.cellsize_deg)}\n")
    out.write(f"nodata_value {_fmt(r.nodata)}\n")
    for row in range(r.nrows - 1, -1, -1):      # top row first on disk
        out.write(" ".join(_fmt(float(v)) for v in r.values[row]))
        out.write("\n")


def raster_to_string(r: LightRaster) -> str:
    buf = io.StringIO()
    write_raster(r, buf)
    return buf.getvalue()


def period_index(window: ObservationWindow, ts: datetime) -> int:
    """Two-week identifier-rotation period containing ts (0-based).

    Trajectory user ids are only comparable within one period; composite
    identity downstream is (period_index, user_id).
    """
    return (ts.date() - window.start.date()).days // 14
