"""Urban-rural site classification from night-light luminosity.

Per-site disk integration of the luminosity raster, deterministic 1-D
k-means (k=3) with farthest-point seeding, and intensity-ordered labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .geo import LightRaster, integrate_disk
from .ingest import Antenna


class SiteClass(Enum):
    RURAL = "RURAL"
    SMALL_CITY = "SMALL_CITY"
    BIG_CITY = "BIG_CITY"


# Label order for ascending centroid intensity.
LABELS_ASCENDING: Tuple[SiteClass, ...] = (
    SiteClass.RURAL, SiteClass.SMALL_CITY, SiteClass.BIG_CITY)


class DegenerateFitError(Exception):
    pass


@dataclass(frozen=True)
class SiteLuminosity:
    antenna_id: int
    luminosity: float

    def __post_init__(self):
        if self.luminosity < 0:
            raise ValueError("luminosity must be non-negative")


@dataclass
class LuminosityResult:
    sites: List[SiteLuminosity]
    n_outside_extent: int       # antennas outside the raster; luminosity 0


def site_luminosities(antennas: Iterable[Antenna], raster: LightRaster,
                      radius_km: float = 7.5) -> LuminosityResult:
    """Integrated night-light intensity in a disk around each antenna."""
    sites: List[SiteLuminosity] = []
    outside = 0
    for a in antennas:
        if raster.cell_of(a.position) is None:
            outside += 1
            sites.append(SiteLuminosity(a.id, 0.0))
            continue
        sites.append(SiteLuminosity(a.id, integrate_disk(raster, a.position,
                                                         radius_km)))
    return LuminosityResult(sites, outside)


@dataclass(frozen=True)
class ClusterModel:
    """Fitted 1-D k-means model; clusters indexed by ascending centroid.

    ``labels`` is None until :func:`label_clusters` attaches the
    urban-rural names (k=3 only).
    """

    centroids: Tuple[float, ...]                # strictly ascending
    assignment: Dict[int, int]                  # antenna_id -> cluster index
    wcss_history: Tuple[float, ...]
    n_iter: int
    labels: Optional[Tuple[SiteClass, ...]] = None

    @property
    def k(self) -> int:
        return len(self.centroids)

    def cluster_sizes(self) -> Tuple[int, ...]:
        sizes = [0] * self.k
        for c in self.assignment.values():
            sizes[c] += 1
        return tuple(sizes)

    def label_of(self, antenna_id: int) -> SiteClass:
        if self.labels is None:
            raise ValueError("model has no labels; call label_clusters first")
        return self.labels[self.assignment[antenna_id]]

    def labeled_assignment(self) -> Dict[int, SiteClass]:
        return {aid: self.label_of(aid) for aid in self.assignment}


def _seed_centroids(values: np.ndarray, k: int) -> np.ndarray:
    """Farthest-point seeding starting at the minimum value.

    Fully deterministic: ties pick the smallest candidate value.
    """
    uniq = np.unique(values)        # sorted ascending
    centers = [uniq[0]]
    for _ in range(1, k):
        d = np.min(np.abs(uniq[:, None] - np.array(centers)[None, :]), axis=1)
        centers.append(uniq[int(np.argmax(d))])
    return np.sort(np.array(centers, dtype=np.float64))


def kmeans_1d(sites: Iterable[SiteLuminosity], k: int = 3, seed: int = 0,
              max_iter: int = 100) -> ClusterModel:
    """Lloyd's algorithm on scalar luminosities, run to an assignment fixed
    point (or max_iter). Assignment ties break toward the lower centroid.

    Initialization is farthest-point from the minimum value and does not
    consume randomness; ``seed`` is accepted for interface stability and
    recorded nowhere.
    """
    site_list = list(sites)
    values = np.array([s.luminosity for s in site_list], dtype=np.float64)
    if len(np.unique(values)) < k:
        raise DegenerateFitError(
            f"need at least {k} distinct values, got {len(np.unique(values))}")

    centroids = _seed_centroids(values, k)
    assign = np.full(len(values), -1, dtype=np.int64)
    wcss_history: List[float] = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        # argmin picks the first (lowest-centroid) cluster on ties because
        # centroids are kept sorted ascending.
        dist2 = (values[:, None] - centroids[None, :]) ** 2
        new_assign = np.argmin(dist2, axis=1)
        wcss = float(np.sum((values - centroids[new_assign]) ** 2))
        if wcss_history and wcss > wcss_history[-1] + 1e-9 * (1 + wcss):
            raise AssertionError(
                f"k-means objective increased: {wcss_history[-1]} -> {wcss}")
        wcss_history.append(wcss)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        new_centroids = centroids.copy()
        for c in range(k):
            members = values[assign == c]
            if members.size:
                new_centroids[c] = members.mean()
        order = np.argsort(new_centroids, kind="stable")
        centroids = new_centroids[order]
        remap = np.empty(k, dtype=np.int64)
        remap[order] = np.arange(k)
        assign = remap[assign]

    assignment = {s.antenna_id: int(c) for s, c in zip(site_list, assign)}
    return ClusterModel(
        centroids=tuple(float(c) for c in centroids),
        assignment=assignment,
        wcss_history=tuple(wcss_history),
        n_iter=n_iter,
    )


def label_clusters(model: ClusterModel) -> ClusterModel:
    """Attach urban-rural labels by centroid intensity: lowest -> RURAL,
    middle -> SMALL_CITY, highest -> BIG_CITY. Centroid ties are a
    degenerate fit."""
    if model.k != len(LABELS_ASCENDING):
        raise ValueError(f"labeling requires k={len(LABELS_ASCENDING)}")
    for lo, hi in zip(model.centroids, model.centroids[1:]):
        if lo >= hi:
            raise DegenerateFitError(f"centroid tie: {model.centroids}")
    return replace(model, labels=LABELS_ASCENDING)
