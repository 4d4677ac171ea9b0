"""Great-circle distances and nearest-POI lookup."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import NoCandidate, UnknownPoi

if TYPE_CHECKING:
    from .ingest import PoiRegistry

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km on a sphere of radius 6371 km."""
    return float(haversine_matrix(np.array([a.lat]), np.array([a.lon]), np.array([b.lat]), np.array([b.lon]))[0, 0])


def haversine_matrix(lat1, lon1, lat2, lon2) -> np.ndarray:
    """Pairwise distances (km) between two point sets, shape ``(len(lat1), len(lat2))``.

    The expression is symmetric under swapping the two sets, so
    ``d(a, b) == d(b, a)`` holds bit for bit.
    """
    p1 = np.radians(np.asarray(lat1, dtype=np.float64))[:, None]
    p2 = np.radians(np.asarray(lat2, dtype=np.float64))[None, :]
    l1 = np.radians(np.asarray(lon1, dtype=np.float64))[:, None]
    l2 = np.radians(np.asarray(lon2, dtype=np.float64))[None, :]
    # squares of sines are even functions, and cos(p1)*cos(p2) is commutative
    sdlat = np.sin((p2 - p1) / 2.0) ** 2
    sdlon = np.sin((l2 - l1) / 2.0) ** 2
    h = sdlat + np.cos(p1) * np.cos(p2) * sdlon
    h = np.clip(h, 0.0, 1.0)
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(h))


def nearest_other_poi(registry: PoiRegistry, poi_id: int) -> int:
    """Closest distinct POI to ``poi_id``; equal distances go to the smaller id."""
    if poi_id not in registry:
        raise UnknownPoi(poi_id)
    if len(registry) < 2:
        raise NoCandidate(f"registry holds only POI {poi_id}")
    i = registry.index(poi_id)
    d = haversine_matrix(registry.lats[i : i + 1], registry.lons[i : i + 1], registry.lats, registry.lons)[0]
    d[i] = np.inf
    ids = registry.ids_array
    best = d.min()
    return int(ids[d == best].min())


