import math

import numpy as np
import pytest

from firecell.geo import (EARTH_RADIUS_KM, BoundingBox, GeoPoint, GridIndex,
                          LightRaster, haversine_km, integrate_disk,
                          raster_value_at)


def rand_point(rng, lat_range=(-60, 60), lon_range=(-179, 179)) -> GeoPoint:
    return GeoPoint(rng.uniform(*lat_range), rng.uniform(*lon_range))


class TestGeoPoint:
    def test_range_enforced(self):
        with pytest.raises(ValueError):
            GeoPoint(91.0, 0.0)
        with pytest.raises(ValueError):
            GeoPoint(0.0, -180.5)
        with pytest.raises(ValueError):
            GeoPoint(float("nan"), 0.0)

    def test_valid(self):
        p = GeoPoint(5.35, -4.02)
        assert p.lat == 5.35 and p.lon == -4.02


class TestHaversine:
    def test_identity_is_zero(self):
        p = GeoPoint(5.35, -4.02)
        assert haversine_km(p, p) == 0.0

    def test_one_degree_along_equator(self):
        # closed form: one degree of arc = 2*pi*R/360
        expected = 2.0 * math.pi * EARTH_RADIUS_KM / 360.0
        d = haversine_km(GeoPoint(0, 0), GeoPoint(0, 1))
        assert d == pytest.approx(111.195, abs=1e-3)
        assert d == pytest.approx(expected, abs=1e-9)

    def test_small_meridian_arc_against_closed_form(self):
        # 0.009 deg of meridian arc = 0.009 * 2*pi*R/360 = 1.00075 km,
        # so the point sits just OUTSIDE a strict 1.0 km threshold.
        expected = 0.009 * 2.0 * math.pi * EARTH_RADIUS_KM / 360.0
        d = haversine_km(GeoPoint(0, 0), GeoPoint(0.009, 0))
        assert d == pytest.approx(expected, abs=1e-9)
        assert not d < 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            a, b = rand_point(rng), rand_point(rng)
            assert haversine_km(a, b) == haversine_km(b, a)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b, c = rand_point(rng), rand_point(rng), rand_point(rng)
            assert haversine_km(a, c) <= (haversine_km(a, b)
                                          + haversine_km(b, c) + 1e-9)

    def test_non_negative(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            assert haversine_km(rand_point(rng), rand_point(rng)) >= 0.0


def make_raster(rng, ncols=20, nrows=15, origin=GeoPoint(5.0, -5.0),
                cellsize=0.03, nodata=-9999.0, nodata_frac=0.1):
    values = rng.uniform(0, 50, size=(nrows, ncols))
    mask = rng.random((nrows, ncols)) < nodata_frac
    values[mask] = nodata
    return LightRaster(ncols=ncols, nrows=nrows, origin=origin,
                       cellsize_deg=cellsize, nodata=nodata, values=values)


class TestRasterValueAt:
    def test_outside_extent_absent(self):
        r = make_raster(np.random.default_rng(0))
        assert raster_value_at(r, GeoPoint(50.0, 50.0)) is None

    def test_single_pixel_center(self):
        r = LightRaster(ncols=1, nrows=1, origin=GeoPoint(0, 0),
                        cellsize_deg=1.0, nodata=-1.0,
                        values=np.array([[7.5]]))
        assert raster_value_at(r, GeoPoint(0.5, 0.5)) == 7.5

    def test_nodata_absent(self):
        r = LightRaster(ncols=1, nrows=1, origin=GeoPoint(0, 0),
                        cellsize_deg=1.0, nodata=-1.0,
                        values=np.array([[-1.0]]))
        assert raster_value_at(r, GeoPoint(0.5, 0.5)) is None

    def test_matches_floor_arithmetic_reference(self):
        rng = np.random.default_rng(4)
        r = make_raster(rng)
        for _ in range(500):
            p = GeoPoint(rng.uniform(4.0, 6.0), rng.uniform(-6.0, -4.0))
            # reference: explicit floor arithmetic
            col = math.floor((p.lon - r.origin.lon) / r.cellsize_deg)
            row = math.floor((p.lat - r.origin.lat) / r.cellsize_deg)
            if 0 <= row < r.nrows and 0 <= col < r.ncols:
                v = float(r.values[row, col])
                expected = None if v == r.nodata else v
            else:
                expected = None
            assert raster_value_at(r, p) == expected


def brute_force_disk(r: LightRaster, center: GeoPoint, radius_km: float) -> float:
    total = 0.0
    for row in range(r.nrows):
        for col in range(r.ncols):
            v = float(r.values[row, col])
            if v == r.nodata:
                continue
            if haversine_km(center, r.cell_center(row, col)) <= radius_km:
                total += v
    return total


class TestIntegrateDisk:
    def test_all_zero_raster(self):
        r = LightRaster(ncols=5, nrows=5, origin=GeoPoint(0, 0),
                        cellsize_deg=0.01, nodata=-1.0,
                        values=np.zeros((5, 5)))
        assert integrate_disk(r, GeoPoint(0.02, 0.02), 5.0) == 0.0

    def test_single_pixel_within_radius(self):
        r = LightRaster(ncols=1, nrows=1, origin=GeoPoint(0, 0),
                        cellsize_deg=0.01, nodata=-1.0,
                        values=np.array([[7.0]]))
        center_of_pixel = r.cell_center(0, 0)
        one_km_away = GeoPoint(center_of_pixel.lat + 1.0 / 111.195,
                               center_of_pixel.lon)
        assert integrate_disk(r, one_km_away, 7.5) == 7.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        r = make_raster(rng, ncols=100, nrows=100, cellsize=0.027)
        for _ in range(50):
            c = GeoPoint(rng.uniform(5.0, 7.5), rng.uniform(-5.0, -2.5))
            radius = rng.uniform(1.0, 20.0)
            got = integrate_disk(r, c, radius)
            want = brute_force_disk(r, c, radius)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_monotone_in_radius(self):
        rng = np.random.default_rng(6)
        r = make_raster(rng, nodata_frac=0.0)
        c = GeoPoint(5.2, -4.8)
        sums = [integrate_disk(r, c, radius) for radius in (1, 3, 5, 10, 20)]
        assert sums == sorted(sums)

    def test_rejects_bad_radius(self):
        r = make_raster(np.random.default_rng(7))
        with pytest.raises(ValueError):
            integrate_disk(r, GeoPoint(5.2, -4.8), 0.0)


class TestGridIndex:
    def test_empty_index(self):
        ix = GridIndex([], cell_km=1.0)
        assert ix.query(GeoPoint(0, 0), 10.0) == []

    def test_single_point_found_at_any_radius(self):
        p = GeoPoint(7.1, -5.3)
        ix = GridIndex([(1, p)], cell_km=1.0)
        for radius in (0.0, 0.1, 1.0, 100.0):
            assert 1 in ix.query(p, radius)

    def test_duplicate_id_rejected(self):
        with pytest.raises(ValueError):
            GridIndex([(1, GeoPoint(0, 0)), (1, GeoPoint(1, 1))])

    @pytest.mark.parametrize("cell_km", [0.5, 1.0, 5.0])
    def test_filtered_query_equals_scan(self, cell_km):
        rng = np.random.default_rng(8)
        pts = {i: GeoPoint(rng.uniform(4, 11), rng.uniform(-9, -2))
               for i in range(10_000)}
        ix = GridIndex(pts.items(), cell_km=cell_km)
        for _ in range(100):
            q = GeoPoint(rng.uniform(4, 11), rng.uniform(-9, -2))
            radius = rng.uniform(0.2, 30.0)
            got = {pid for pid, _ in ix.neighbors_within(q, radius)}
            want = {pid for pid, p in pts.items()
                    if haversine_km(q, p) <= radius}
            assert got == want


class TestBoundingBox:
    def test_inclusive_edges(self):
        box = BoundingBox(0.0, 1.0, 0.0, 1.0)
        assert box.contains(GeoPoint(0.0, 0.0))
        assert box.contains(GeoPoint(1.0, 1.0))
        assert not box.contains(GeoPoint(1.0001, 0.5))

    def test_bad_ordering(self):
        with pytest.raises(ValueError):
            BoundingBox(1.0, 0.0, 0.0, 1.0)
