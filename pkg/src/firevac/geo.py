"""Geodetic primitives: great-circle distance, interpolation, polygon containment.

Coordinates are WGS84-style latitude/longitude degrees treated as points on a
sphere of radius 6,371,000 m. Polygon containment is computed in planar
lat/lon space, which is accurate at wildfire scales (regions well under one
degree across).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractError

EARTH_RADIUS_M = 6_371_000.0

# Tolerance for the on-boundary test in planar lat/lon space. 1e-12 degrees
# is ~0.1 micrometres on the ground, far below coordinate precision.
_BOUNDARY_EPS = 1e-12


@dataclass(frozen=True)
class GeoPoint:
    """A latitude/longitude pair in degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise ContractError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise ContractError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class FirePolygon:
    """A fire perimeter: one exterior ring plus optional interior holes.

    Rings are stored open (first vertex != last; closure is implicit) and must
    be simple (non-self-intersecting). Validation happens at construction so
    downstream code can assume well-formed geometry.
    """

    exterior: tuple[GeoPoint, ...]
    holes: tuple[tuple[GeoPoint, ...], ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        _validate_ring(self.exterior, f"exterior of {self.name or 'polygon'}")
        for i, hole in enumerate(self.holes):
            _validate_ring(hole, f"hole {i} of {self.name or 'polygon'}")

    def bounding_box(self) -> tuple[float, float, float, float]:
        """(min_lat, min_lon, max_lat, max_lon) of the exterior ring."""
        lats = [p.lat for p in self.exterior]
        lons = [p.lon for p in self.exterior]
        return min(lats), min(lons), max(lats), max(lons)


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    s = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(s)))


def interpolate(a: GeoPoint, b: GeoPoint, fraction: float) -> GeoPoint:
    """Linear blend in lat/lon space; fraction 0 gives a, 1 gives b."""
    if not (0.0 <= fraction <= 1.0):
        raise ContractError(f"interpolation fraction {fraction} outside [0, 1]")
    return GeoPoint(
        lat=a.lat + (b.lat - a.lat) * fraction,
        lon=a.lon + (b.lon - a.lon) * fraction,
    )


def point_in_polygon(p: GeoPoint, poly: FirePolygon) -> bool:
    """Strict-interior containment: true iff p is inside the exterior ring and
    not inside (or on the boundary of) any hole.

    Points exactly on a ring count as outside the region that ring bounds, so
    a point on the exterior boundary is outside the polygon and a point on a
    hole boundary is still inside the polygon's interior ring but the hole
    test below treats hole boundaries as part of the kept region.
    """
    if _on_ring(p, poly.exterior):
        return False
    if not _ray_cast(p, poly.exterior):
        return False
    for hole in poly.holes:
        # Strictly inside a hole means excluded; on the hole boundary stays in.
        if not _on_ring(p, hole) and _ray_cast(p, hole):
            return False
    return True


def _ray_cast(p: GeoPoint, ring: tuple[GeoPoint, ...]) -> bool:
    """Even-odd crossing test with a ray cast in the +lon direction."""
    inside = False
    n = len(ring)
    for i in range(n):
        a = ring[i]
        b = ring[(i + 1) % n]
        if (a.lat > p.lat) != (b.lat > p.lat):
            lon_cross = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat)
            if p.lon < lon_cross:
                inside = not inside
    return inside


def _on_ring(p: GeoPoint, ring: tuple[GeoPoint, ...]) -> bool:
    n = len(ring)
    for i in range(n):
        if _on_segment(p, ring[i], ring[(i + 1) % n]):
            return True
    return False


def _on_segment(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> bool:
    cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon)
    if abs(cross) > _BOUNDARY_EPS:
        return False
    if not (min(a.lat, b.lat) - _BOUNDARY_EPS <= p.lat <= max(a.lat, b.lat) + _BOUNDARY_EPS):
        return False
    if not (min(a.lon, b.lon) - _BOUNDARY_EPS <= p.lon <= max(a.lon, b.lon) + _BOUNDARY_EPS):
        return False
    return True


def _validate_ring(ring: tuple[GeoPoint, ...], label: str) -> None:
    if len(ring) < 3:
        raise ContractError(f"{label}: ring needs at least 3 vertices, got {len(ring)}")
    if ring[0] == ring[-1]:
        raise ContractError(f"{label}: ring must be stored open (first vertex != last)")
    n = len(ring)
    for i in range(n):
        if ring[i] == ring[(i + 1) % n]:
            raise ContractError(f"{label}: zero-length edge at vertex {i}")
    if not _ring_is_simple(ring):
        raise ContractError(f"{label}: ring is self-intersecting")


def _ring_is_simple(ring: tuple[GeoPoint, ...]) -> bool:
    """Check no two non-adjacent edges intersect. O(n^2), fine at fire scale."""
    n = len(ring)
    segs = [(ring[i], ring[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = (j == i + 1) or (i == 0 and j == n - 1)
            if adjacent:
                continue
            if _segments_intersect(segs[i][0], segs[i][1], segs[j][0], segs[j][1]):
                return False
    return True


def _segments_intersect(p1: GeoPoint, p2: GeoPoint, q1: GeoPoint, q2: GeoPoint) -> bool:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and _in_box(p1, q1, q2):
        return True
    if d2 == 0 and _in_box(p2, q1, q2):
        return True
    if d3 == 0 and _in_box(q1, p1, p2):
        return True
    if d4 == 0 and _in_box(q2, p1, p2):
        return True
    return False


def _orient(a: GeoPoint, b: GeoPoint, c: GeoPoint) -> float:
    return (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon)


def _in_box(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> bool:
    return (
        min(a.lat, b.lat) <= p.lat <= max(a.lat, b.lat)
        and min(a.lon, b.lon) <= p.lon <= max(a.lon, b.lon)
    )
