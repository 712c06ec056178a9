"""Geodesic distance, raster geometry and a uniform-grid spatial index.

All types are immutable after construction and all operations are pure
functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

# Mean Earth radius (IUGG), spherical model. Ellipsoidal accuracy is
# irrelevant at the 1-7.5 km scales this toolkit works at.
EARTH_RADIUS_KM = 6371.0088

# Kilometers per degree of latitude on the sphere (constant).
KM_PER_DEG_LAT = math.pi * EARTH_RADIUS_KM / 180.0


@dataclass(frozen=True)
class GeoPoint:
    """A WGS-style lat/lon point in degrees. Ranges enforced at construction."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinate: lat={self.lat} lon={self.lon}")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive lat/lon bounding box."""

    min_lat: float
    max_lat: float
    min_lon: float
    max_lon: float

    def __post_init__(self):
        if self.min_lat > self.max_lat or self.min_lon > self.max_lon:
            raise ValueError("bounding box min exceeds max")

    def contains(self, p: GeoPoint) -> bool:
        return (self.min_lat <= p.lat <= self.max_lat
                and self.min_lon <= p.lon <= self.max_lon)


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in kilometers between two points.

    Symmetric, non-negative, zero iff the points are equal.
    """
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    s = (math.sin(dphi / 2.0) ** 2
         + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2)
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))


def haversine_km_vec(lat1, lon1, lat2, lon2):
    """Vectorized haversine over numpy arrays of degrees (broadcasting)."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = np.radians(lat2 - lat1)
    dlam = np.radians(lon2 - lon1)
    s = (np.sin(dphi / 2.0) ** 2
         + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2)
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(s)))


@dataclass(frozen=True)
class LightRaster:
    """Georeferenced night-light intensity grid.

    ``values`` has shape (nrows, ncols) with row 0 the SOUTHERNMOST row
    (the on-disk ASCII format stores the top row first; the reader flips).
    ``origin`` is the lower-left corner of the grid, not a cell center.
    Cells equal to ``nodata`` carry no observation.
    """

    ncols: int
    nrows: int
    origin: GeoPoint
    cellsize_deg: float
    nodata: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.ncols <= 0 or self.nrows <= 0:
            raise ValueError("raster dimensions must be positive")
        if self.cellsize_deg <= 0:
            raise ValueError("cellsize must be positive")
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.nrows, self.ncols):
            raise ValueError(
                f"values shape {v.shape} != ({self.nrows}, {self.ncols})")
        data = v[v != self.nodata]
        if data.size and float(data.min()) < 0.0:
            raise ValueError("negative intensity in raster")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def cell_of(self, p: GeoPoint) -> Optional[Tuple[int, int]]:
        """(row, col) of the cell containing p, or None if outside the extent."""
        col = math.floor((p.lon - self.origin.lon) / self.cellsize_deg)
        row = math.floor((p.lat - self.origin.lat) / self.cellsize_deg)
        if 0 <= row < self.nrows and 0 <= col < self.ncols:
            return row, col
        return None

    def cell_center(self, row: int, col: int) -> GeoPoint:
        return GeoPoint(
            self.origin.lat + (row + 0.5) * self.cellsize_deg,
            self.origin.lon + (col + 0.5) * self.cellsize_deg,
        )


def raster_value_at(r: LightRaster, p: GeoPoint) -> Optional[float]:
    """Value of the pixel whose cell contains p; None outside extent or nodata."""
    rc = r.cell_of(p)
    if rc is None:
        return None
    v = float(r.values[rc])
    return None if v == r.nodata else v


def integrate_disk(r: LightRaster, center: GeoPoint, radius_km: float) -> float:
    """Sum of non-nodata pixel values whose pixel CENTER lies within
    ``radius_km`` (haversine) of ``center``. 0.0 if no pixel qualifies.

    Inclusion is by pixel center, not area overlap: deterministic and
    exactly comparable against a full-scan reference.
    """
    if radius_km <= 0:
        raise ValueError("radius_km must be positive")
    dlat = radius_km / KM_PER_DEG_LAT
    band_lat = min(89.9, abs(center.lat) + dlat)
    coslat = max(math.cos(math.radians(band_lat)), 1e-9)
    dlon = radius_km / (KM_PER_DEG_LAT * coslat)

    cs = r.cellsize_deg
    row_lo = max(0, math.floor((center.lat - dlat - r.origin.lat) / cs) - 1)
    row_hi = min(r.nrows - 1, math.ceil((center.lat + dlat - r.origin.lat) / cs) + 1)
    col_lo = max(0, math.floor((center.lon - dlon - r.origin.lon) / cs) - 1)
    col_hi = min(r.ncols - 1, math.ceil((center.lon + dlon - r.origin.lon) / cs) + 1)

    total = 0.0
    for row in range(row_lo, row_hi + 1):
        for col in range(col_lo, col_hi + 1):
            v = float(r.values[row, col])
            if v == r.nodata:
                continue
            if haversine_km(center, r.cell_center(row, col)) <= radius_km:
                total += v
    return total


class GridIndex:
    """Uniform lat/lon bucket grid over identified points.

    Cell size is in kilometers; longitude cells are scaled by cos(latitude)
    at the extent midpoint. ``query`` returns a superset of the true
    <= radius neighbor set for ANY radius (correctness never depends on the
    cell size); the caller filters candidates with :func:`haversine_km`.
    Immutable after construction.
    """

    def __init__(self, points: Iterable[Tuple[int, GeoPoint]], cell_km: float = 1.0):
        if cell_km <= 0:
            raise ValueError("cell_km must be positive")
        pts = list(points)
        self._points: Dict[int, GeoPoint] = dict(pts)
        if len(self._points) != len(pts):
            raise ValueError("duplicate point id in index")
        self.cell_km = float(cell_km)
        if pts:
            mid_lat = (min(p.lat for _, p in pts) + max(p.lat for _, p in pts)) / 2.0
        else:
            mid_lat = 0.0
        self._cell_deg_lat = cell_km / KM_PER_DEG_LAT
        coslat = max(math.cos(math.radians(mid_lat)), 1e-9)
        self._cell_deg_lon = cell_km / (KM_PER_DEG_LAT * coslat)
        self._buckets: Dict[Tuple[int, int], List[int]] = {}
        for pid, p in pts:
            self._buckets.setdefault(self._key(p), []).append(pid)

    def __len__(self) -> int:
        return len(self._points)

    def position(self, pid: int) -> GeoPoint:
        return self._points[pid]

    def _key(self, p: GeoPoint) -> Tuple[int, int]:
        return (math.floor(p.lat / self._cell_deg_lat),
                math.floor(p.lon / self._cell_deg_lon))

    def query(self, p: GeoPoint, radius_km: float) -> List[int]:
        """Candidate ids whose distance to p MAY be <= radius_km (superset)."""
        if radius_km < 0:
            raise ValueError("radius_km must be non-negative")
        dlat = radius_km / KM_PER_DEG_LAT
        band_lat = min(89.9, abs(p.lat) + dlat)
        coslat = max(math.cos(math.radians(band_lat)), 1e-9)
        dlon = radius_km / (KM_PER_DEG_LAT * coslat)
        i_lo = math.floor((p.lat - dlat) / self._cell_deg_lat) - 1
        i_hi = math.floor((p.lat + dlat) / self._cell_deg_lat) + 1
        j_lo = math.floor((p.lon - dlon) / self._cell_deg_lon) - 1
        j_hi = math.floor((p.lon + dlon) / self._cell_deg_lon) + 1
        out: List[int] = []
        for i in range(i_lo, i_hi + 1):
            for j in range(j_lo, j_hi + 1):
                ids = self._buckets.get((i, j))
                if ids:
                    out.extend(ids)
        return out

    def neighbors_within(self, p: GeoPoint, radius_km: float,
                         strict: bool = False) -> List[Tuple[int, float]]:
        """(id, distance) pairs within radius, distance-filtered with haversine.

        strict=True uses ``< radius`` instead of ``<=``.
        """
        out = []
        for pid in self.query(p, radius_km):
            d = haversine_km(p, self._points[pid])
            if (d < radius_km) if strict else (d <= radius_km):
                out.append((pid, d))
        return out
