"""Fire-perimeter work: densify the boundary into closely spaced waypoints,
split them among service drones with a single-pass clustering step, check
each drone's tour against its energy budget, and place coordinator drones by
greedy farthest-first selection.

All randomness comes through an explicit seeded ``random.Random``; nothing
touches the global RNG state.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import ContractError, EscalationError
from .geo import FirePolygon, GeoPoint, haversine, interpolate, point_in_polygon


@dataclass(frozen=True)
class EnergyModel:
    """Endurance-seconds at constant cruise speed. Turns and hover costs are
    ignored; the simplest model that still ties feasibility to tour length."""

    flight_endurance_s: float
    speed_mps: float

    def __post_init__(self) -> None:
        if self.flight_endurance_s <= 0 or self.speed_mps <= 0:
            raise ContractError("endurance and speed must both be > 0")


@dataclass
class SdAssignment:
    """Waypoint clusters per service drone, in perimeter order, plus the
    sampled centroid each cluster formed around."""

    clusters: dict[str, list[GeoPoint]]
    centroids: dict[str, GeoPoint]

    def waypoint_count(self) -> int:
        return sum(len(c) for c in self.clusters.values())


@dataclass
class FeasibilityVerdict:
    tours_m: dict[str, float]
    required_s: dict[str, float]
    feasible: dict[str, bool]

    @property
    def all_feasible(self) -> bool:
        return all(self.feasible.values())

    def infeasible_drones(self) -> list[str]:
        return [sd for sd, ok in sorted(self.feasible.items()) if not ok]


@dataclass
class HoverPlacement:
    hovers: dict[str, GeoPoint] = field(default_factory=dict)

    def live_points(self) -> list[tuple[str, GeoPoint]]:
        return sorted(self.hovers.items())


def densify_perimeter(poly: FirePolygon, max_spacing_m: float = 10.0) -> list[GeoPoint]:
    """Insert interior waypoints on every perimeter edge (closing edge
    included) so consecutive spacing never exceeds ``max_spacing_m``.

    An edge of length L gets ceil(L / max_spacing_m) - 1 equally spaced
    interior points. Original vertices are all kept, in order.
    """
    if max_spacing_m <= 0:
        raise ContractError("max_spacing_m must be > 0")
    ring = poly.exterior
    total = sum(haversine(ring[i], ring[(i + 1) % len(ring)]) for i in range(len(ring)))
    if total <= 0:
        raise ContractError(f"polygon {poly.name!r} has a zero-length perimeter")

    waypoints: list[GeoPoint] = []
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        waypoints.append(a)
        length = haversine(a, b)
        interior = max(0, math.ceil(length / max_spacing_m) - 1)
        for k in range(1, interior + 1):
            waypoints.append(interpolate(a, b, k / (interior + 1)))
    return waypoints


def densify_all(polys: list[FirePolygon], max_spacing_m: float = 10.0) -> list[GeoPoint]:
    """Densify each polygon independently and pool the waypoints. Multi-part
    fires cluster over the combined pool."""
    pooled: list[GeoPoint] = []
    for poly in polys:
        pooled.extend(densify_perimeter(poly, max_spacing_m))
    return pooled


def assign_waypoints(
    waypoints: list[GeoPoint], sd_count: int, rng: random.Random
) -> SdAssignment:
    """Single-pass clustering: sample ``sd_count`` distinct waypoints as
    centroids (uniform, without replacement by index), then assign every
    waypoint to its geodesically nearest centroid. No centroid update or
    re-iteration happens. Distance ties go to the lowest centroid index, and
    waypoints keep their perimeter order within each cluster.
    """
    if sd_count < 1:
        raise ContractError("sd_count must be >= 1")
    if sd_count > len(waypoints):
        raise ContractError(
            f"{sd_count} service drones for {len(waypoints)} waypoints: "
            "use fewer drones or finer perimeter spacing"
        )
    centroid_indices = sorted(rng.sample(range(len(waypoints)), sd_count))
    sd_ids = [f"sd-{i}" for i in range(sd_count)]
    centroids = {sd_ids[i]: waypoints[centroid_indices[i]] for i in range(sd_count)}

    clusters: dict[str, list[GeoPoint]] = {sd: [] for sd in sd_ids}
    for wp in waypoints:
        best = min(
            range(sd_count), key=lambda i: (haversine(wp, centroids[sd_ids[i]]), i)
        )
        clusters[sd_ids[best]].append(wp)
    return SdAssignment(clusters=clusters, centroids=centroids)


def tour_length_m(cluster: list[GeoPoint], base: GeoPoint | None = None) -> float:
    """Path length through the cluster's waypoints in order; when ``base`` is
    given the transit leg base -> first waypoint is included."""
    length = 0.0
    if base is not None and cluster:
        length += haversine(base, cluster[0])
    for a, b in zip(cluster, cluster[1:]):
        length += haversine(a, b)
    return length


def check_feasibility(
    assignment: SdAssignment,
    model: EnergyModel,
    base: GeoPoint | None = None,
) -> FeasibilityVerdict:
    """A cluster is feasible iff its tour can be flown within the drone's
    endurance; equality counts as feasible. An empty cluster is trivially
    feasible. Pass ``base`` to include the transit leg in the tour."""
    tours: dict[str, float] = {}
    required: dict[str, float] = {}
    feasible: dict[str, bool] = {}
    for sd, cluster in assignment.clusters.items():
        tours[sd] = tour_length_m(cluster, base=base)
        required[sd] = tours[sd] / model.speed_mps
        feasible[sd] = required[sd] <= model.flight_endurance_s
    return FeasibilityVerdict(tours_m=tours, required_s=required, feasible=feasible)


def sample_candidates(
    polys: list[FirePolygon], n: int, rng: random.Random
) -> list[GeoPoint]:
    """Sample ``n`` points uniformly inside the fire region by rejection over
    the union bounding box. Points inside any polygon (and not in a hole)
    are accepted. Fails after 1000 * n rejected attempts."""
    if n < 1:
        raise ContractError("candidate count must be >= 1")
    if not polys:
        raise ContractError("no fire polygons to sample from")
    boxes = [p.bounding_box() for p in polys]
    min_lat = min(b[0] for b in boxes)
    min_lon = min(b[1] for b in boxes)
    max_lat = max(b[2] for b in boxes)
    max_lon = max(b[3] for b in boxes)

    out: list[GeoPoint] = []
    attempts = 0
    limit = 1000 * n
    while len(out) < n:
        if attempts >= limit:
            raise EscalationError(
                f"rejection sampling failed after {limit} attempts: "
                "fire polygons have vanishing area"
            )
        attempts += 1
        p = GeoPoint(
            lat=rng.uniform(min_lat, max_lat), lon=rng.uniform(min_lon, max_lon)
        )
        if any(point_in_polygon(p, poly) for poly in polys):
            out.append(p)
    return out


def place_coordinators(
    candidates: list[GeoPoint],
    cd_count: int,
    rng: random.Random,
    cd_ids: list[str] | None = None,
) -> HoverPlacement:
    """Greedy farthest-first hover selection: the first hover is a seeded
    uniform pick; every later hover is the candidate maximizing the minimum
    geodesic distance to all hovers chosen so far (ties to the lowest
    candidate index). ``cd_ids`` names the drones receiving the hovers in
    selection order; defaults to cd-0..cd-{n-1}."""
    if cd_count < 1:
        raise ContractError("cd_count must be >= 1")
    if len(candidates) < cd_count:
        raise ContractError(
            f"{len(candidates)} candidates cannot seat {cd_count} coordinator drones"
        )
    if cd_ids is None:
        cd_ids = [f"cd-{k}" for k in range(cd_count)]
    if len(cd_ids) != cd_count:
        raise ContractError("cd_ids length must equal cd_count")
    chosen: list[int] = [rng.randrange(len(candidates))]
    min_dist = [haversine(c, candidates[chosen[0]]) for c in candidates]
    while len(chosen) < cd_count:
        best = max(
            (i for i in range(len(candidates)) if i not in chosen),
            key=lambda i: (min_dist[i], -i),
        )
        chosen.append(best)
        for i, c in enumerate(candidates):
            d = haversine(c, candidates[best])
            if d < min_dist[i]:
                min_dist[i] = d
    return HoverPlacement(
        hovers={cd_ids[k]: candidates[idx] for k, idx in enumerate(chosen)}
    )
