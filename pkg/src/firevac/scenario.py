"""File-based inputs and outputs: fire polygons and safe locations (GeoJSON),
ground graphs (custom JSON), elevation providers, route export, and the
scenario configuration file that drives a simulation run.

Loading is single-threaded and deterministic; loaded structures are treated
as immutable afterwards.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field, fields

from .errors import ScenarioError
from .geo import FirePolygon, GeoPoint
from .ground_map import GraphEdge, GraphNode, GroundGraph, augment_elevation

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Elevation providers


class ConstantElevation:
    """Flat terrain at a fixed height."""

    def __init__(self, height_m: float = 0.0):
        self.height_m = float(height_m)

    def elevation_at(self, p: GeoPoint) -> float:
        return self.height_m


class PlaneElevation:
    """Analytic sloped plane: h = a * lat + b * lon + c. Deterministic and
    needs no data files, which keeps test scenarios hermetic."""

    def __init__(self, a: float, b: float, c: float = 0.0):
        self.a, self.b, self.c = float(a), float(b), float(c)

    def elevation_at(self, p: GeoPoint) -> float:
        return self.a * p.lat + self.b * p.lon + self.c


class GridElevation:
    """Bilinear interpolation over a regular lat/lon grid of heights.

    The grid file is JSON: {"origin": [lat, lon], "cell_deg": d, "rows": [[h...]...]}
    with rows[i][j] the height at (origin_lat + i*d, origin_lon + j*d).
    Queries outside the grid clamp to the border cells.
    """

    def __init__(self, origin: tuple[float, float], cell_deg: float, rows: list[list[float]]):
        if cell_deg <= 0:
            raise ScenarioError("elevation grid cell_deg must be > 0")
        if not rows or not rows[0]:
            raise ScenarioError("elevation grid must have at least one row and column")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ScenarioError("elevation grid rows must all have equal length")
        self.origin = origin
        self.cell_deg = float(cell_deg)
        self.rows = rows

    @classmethod
    def from_file(cls, path: str) -> "GridElevation":
        data = _read_json(path)
        try:
            return cls(tuple(data["origin"]), data["cell_deg"], data["rows"])
        except KeyError as exc:
            raise ScenarioError(f"{path}: elevation grid missing key {exc}") from exc

    def elevation_at(self, p: GeoPoint) -> float:
        i = (p.lat - self.origin[0]) / self.cell_deg
        j = (p.lon - self.origin[1]) / self.cell_deg
        i = min(max(i, 0.0), len(self.rows) - 1.0)
        j = min(max(j, 0.0), len(self.rows[0]) - 1.0)
        i0, j0 = int(i), int(j)
        i1 = min(i0 + 1, len(self.rows) - 1)
        j1 = min(j0 + 1, len(self.rows[0]) - 1)
        fi, fj = i - i0, j - j0
        top = self.rows[i0][j0] * (1 - fj) + self.rows[i0][j1] * fj
        bot = self.rows[i1][j0] * (1 - fj) + self.rows[i1][j1] * fj
        return top * (1 - fi) + bot * fi


def make_elevation_provider(spec) -> object:
    """Build a provider from a config value: a path string (grid file) or a
    dict {"mode": "constant"|"plane"|"grid", ...}."""
    if isinstance(spec, str):
        return GridElevation.from_file(spec)
    if not isinstance(spec, dict):
        raise ScenarioError(f"elevation spec must be a path or object, got {type(spec).__name__}")
    mode = spec.get("mode")
    if mode == "constant":
        return ConstantElevation(spec.get("height_m", 0.0))
    if mode == "plane":
        try:
            return PlaneElevation(spec["a"], spec["b"], spec.get("c", 0.0))
        except KeyError as exc:
            raise ScenarioError(f"plane elevation spec missing key {exc}") from exc
    if mode == "grid":
        try:
            return GridElevation.from_file(spec["path"])
        except KeyError as exc:
            raise ScenarioError(f"grid elevation spec missing key {exc}") from exc
    raise ScenarioError(f"unknown elevation mode {mode!r}")


# --------------------------------------------------------------------------
# GeoJSON inputs


def load_fire_polygons(path: str) -> list[FirePolygon]:
    """Parse a GeoJSON FeatureCollection of Polygon/MultiPolygon features.

    Each MultiPolygon part becomes its own FirePolygon. Non-polygon
    geometries are skipped with a warning; malformed rings are rejected.
    """
    data = _read_json(path)
    if data.get("type") != "FeatureCollection":
        raise ScenarioError(f"{path}: expected a FeatureCollection, got {data.get('type')!r}")
    polygons: list[FirePolygon] = []
    for idx, feature in enumerate(data.get("features", [])):
        geom = feature.get("geometry") or {}
        gtype = geom.get("type")
        name = str(feature.get("properties", {}).get("name", f"fire-{idx}"))
        if gtype == "Polygon":
            polygons.append(_polygon_from_rings(geom.get("coordinates", []), name, path, idx))
        elif gtype == "MultiPolygon":
            for part, rings in enumerate(geom.get("coordinates", [])):
                polygons.append(_polygon_from_rings(rings, f"{name}/{part}", path, idx))
        else:
            log.warning("%s: feature %d has non-polygon geometry %r, skipped", path, idx, gtype)
    return polygons


def _polygon_from_rings(rings, name: str, path: str, idx: int) -> FirePolygon:
    if not rings:
        raise ScenarioError(f"{path}: feature {idx} ({name}) has no rings")
    try:
        exterior = _ring_points(rings[0])
        holes = tuple(_ring_points(r) for r in rings[1:])
        return FirePolygon(exterior=exterior, holes=holes, name=name)
    except (ScenarioError, ValueError, TypeError, IndexError) as exc:
        raise ScenarioError(f"{path}: feature {idx} ({name}): {exc}") from exc


def _ring_points(ring) -> tuple[GeoPoint, ...]:
    pts = [GeoPoint(lat=float(pos[1]), lon=float(pos[0])) for pos in ring]
    # GeoJSON rings repeat the first position at the end; store open.
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    return tuple(pts)


def load_safe_locations(path: str) -> list[GeoPoint]:
    """Parse a GeoJSON FeatureCollection of Point features."""
    data = _read_json(path)
    if data.get("type") != "FeatureCollection":
        raise ScenarioError(f"{path}: expected a FeatureCollection, got {data.get('type')!r}")
    points: list[GeoPoint] = []
    for idx, feature in enumerate(data.get("features", [])):
        geom = feature.get("geometry") or {}
        if geom.get("type") != "Point":
            log.warning("%s: feature %d is not a Point, skipped", path, idx)
            continue
        try:
            lon, lat = geom["coordinates"][0], geom["coordinates"][1]
            points.append(GeoPoint(lat=float(lat), lon=float(lon)))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ScenarioError(f"{path}: feature {idx}: bad Point coordinates: {exc}") from exc
    return points


# --------------------------------------------------------------------------
# Ground graph


def load_ground_graph(path: str, provider=None, samples_per_edge: int = 0,
                      gain_mode: str = "endpoint") -> GroundGraph:
    """Load the node/edge JSON format and, when a provider is given, augment
    with elevation so every edge carries its directional gains."""
    data = _read_json(path)
    try:
        raw_nodes = data["nodes"]
        raw_edges = data["edges"]
    except KeyError as exc:
        raise ScenarioError(f"{path}: graph file missing key {exc}") from exc

    nodes: dict[str, GraphNode] = {}
    for n in raw_nodes:
        try:
            nid = str(n["id"])
            nodes[nid] = GraphNode(point=GeoPoint(lat=float(n["lat"]), lon=float(n["lon"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"{path}: bad node record {n!r}: {exc}") from exc

    edges: dict[tuple[str, str], GraphEdge] = {}
    for e in raw_edges:
        try:
            u, v, length = str(e["u"]), str(e["v"]), float(e["length_m"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"{path}: bad edge record {e!r}: {exc}") from exc
        if u not in nodes:
            raise ScenarioError(f"{path}: edge ({u}, {v}) references unknown node {u!r}")
        if v not in nodes:
            raise ScenarioError(f"{path}: edge ({u}, {v}) references unknown node {v!r}")
        if length <= 0:
            raise ScenarioError(f"{path}: edge ({u}, {v}) has non-positive length {length}")
        edges[(u, v)] = GraphEdge(length_m=length)

    g = GroundGraph.build(nodes, edges)
    if provider is not None:
        g = augment_elevation(g, provider, samples_per_edge=samples_per_edge, mode=gain_mode)
    g.warn_on_short_edges()
    return g


def save_ground_graph(g: GroundGraph, path: str) -> None:
    data = {
        "nodes": [
            {"id": nid, "lat": n.point.lat, "lon": n.point.lon}
            for nid, n in sorted(g.nodes.items())
        ],
        "edges": [
            {"u": u, "v": v, "length_m": e.length_m}
            for (u, v), e in sorted(g.edges.items())
        ],
    }
    write_file_atomically(path, json.dumps(data, indent=1))


# --------------------------------------------------------------------------
# Route export


def export_route(route, path: str) -> None:
    """Write a route as a GeoJSON feature: LineString for 2+ waypoints, Point
    for the degenerate single-node route. Positions are lon,lat."""
    waypoints = list(route.waypoints)
    if not waypoints:
        raise ScenarioError("cannot export an empty route")
    if len(waypoints) == 1:
        geometry = {"type": "Point", "coordinates": [waypoints[0].lon, waypoints[0].lat]}
    else:
        geometry = {
            "type": "LineString",
            "coordinates": [[p.lon, p.lat] for p in waypoints],
        }
    feature = {
        "type": "Feature",
        "geometry": geometry,
        "properties": {
            "length_m": route.length_m,
            "cost": route.cost,
            "goal": [route.goal.lon, route.goal.lat],
            "node_ids": list(route.node_ids),
        },
    }
    doc = {"type": "FeatureCollection", "features": [feature]}
    try:
        write_file_atomically(path, json.dumps(doc, indent=1))
    except OSError as exc:
        raise ScenarioError(f"failed to write route to {path}: {exc}") from exc


def write_file_atomically(path: str, text: str) -> None:
    """Write to a temp file in the target directory, then rename. Failed runs
    never leave a partial output file behind."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# Scenario configuration


@dataclass
class FaultSpec:
    t_s: float
    kind: str  # "kill_cd" | "kill_sd"
    target: str


@dataclass
class Scenario:
    """Everything a simulation run needs, loaded from one JSON file."""

    fire_polygons_path: str
    safe_locations_path: str
    ground_graph_path: str
    sd_count: int
    cd_count: int
    rng_seed: int
    elevation: object = None  # provider spec (dict or path); resolved lazily
    name: str = "scenario"
    sd_speed_mps: float = 5.0
    walk_speed_mps: float = 1.5
    frame_interval_s: float = 2.0
    heartbeat_interval_s: float = 30.0
    walk_update_interval_s: float = 10.0
    surveillance_duration_s: float = 600.0
    detection_p_start: float = 0.8
    detection_p_end: float = 0.2
    alpha: float = 1.0
    beta: float = 0.1
    max_spacing_m: float = 10.0
    flight_endurance_s: float = 5400.0
    detection_latency_s: float = 0.020
    message_delay_s: float = 0.005
    replication_factor: int = 3
    miss_threshold: int = 3
    arrival_tolerance_m: float = 5.0
    hover_candidate_count: int = 200
    samples_per_edge: int = 0
    elevation_gain_mode: str = "endpoint"
    prune_crossing_edges: bool = False
    include_transit_leg: bool = False
    walk_budget_deduction: bool = True
    route_gen_timing: str = "modeled"  # "modeled" | "wallclock"
    route_gen_cost_per_expansion_s: float = 5e-6
    max_sim_time_s: float = 7200.0
    faults: list[FaultSpec] = field(default_factory=list)

    def validate(self) -> None:
        if self.sd_count < 1 or self.cd_count < 1:
            raise ScenarioError("sd_count and cd_count must both be >= 1")
        for name in ("frame_interval_s", "heartbeat_interval_s", "walk_update_interval_s",
                     "sd_speed_mps", "walk_speed_mps", "max_spacing_m"):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"{name} must be > 0")
        if not (0.0 <= self.detection_p_end <= self.detection_p_start <= 1.0):
            raise ScenarioError("detection probabilities must satisfy 0 <= p_end <= p_start <= 1")
        if self.alpha < 0 or self.beta < 0 or (self.alpha == 0 and self.beta == 0):
            raise ScenarioError("alpha and beta must be >= 0 and not both zero")
        if self.replication_factor < 1:
            raise ScenarioError("replication_factor must be >= 1")
        if self.miss_threshold < 1:
            raise ScenarioError("miss_threshold must be >= 1")
        if self.route_gen_timing not in ("modeled", "wallclock"):
            raise ScenarioError(f"unknown route_gen_timing {self.route_gen_timing!r}")
        if self.elevation_gain_mode not in ("endpoint", "piecewise"):
            raise ScenarioError(f"unknown elevation_gain_mode {self.elevation_gain_mode!r}")
        for f in self.faults:
            if f.kind not in ("kill_cd", "kill_sd"):
                raise ScenarioError(f"unknown fault kind {f.kind!r}")
            if f.t_s < 0:
                raise ScenarioError("fault times must be >= 0")


_PATH_KEYS = {
    "fire_polygons": "fire_polygons_path",
    "safe_locations": "safe_locations_path",
    "ground_graph": "ground_graph_path",
}


def load_scenario(path: str, overrides: dict | None = None) -> Scenario:
    """Load and validate a scenario config. Unknown keys are rejected so typos
    fail loudly instead of silently falling back to defaults. ``overrides``
    (e.g. CLI flags) take precedence over file values."""
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: scenario config must be a JSON object")
    data.update(overrides or {})

    known = {f.name for f in fields(Scenario)} | set(_PATH_KEYS)
    known -= set(_PATH_KEYS.values())  # file uses the short names
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(f"{path}: unknown scenario key(s): {sorted(unknown)}")

    kwargs = {}
    for key, value in data.items():
        if key == "faults":
            kwargs["faults"] = [
                FaultSpec(t_s=float(f["t"]), kind=str(f["kind"]), target=str(f["target"]))
                for f in value
            ]
        elif key in _PATH_KEYS:
            kwargs[_PATH_KEYS[key]] = _resolve_path(path, str(value))
        elif key == "elevation":
            kwargs["elevation"] = _resolve_path(path, value) if isinstance(value, str) else value
        else:
            kwargs[key] = value
    for required in _PATH_KEYS.values():
        if required not in kwargs:
            raise ScenarioError(f"{path}: missing required key {required.removesuffix('_path')!r}")
    for required in ("sd_count", "cd_count", "rng_seed"):
        if required not in kwargs:
            raise ScenarioError(f"{path}: missing required key {required!r}")

    try:
        scenario = Scenario(**kwargs)
    except TypeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    scenario.validate()
    if isinstance(scenario.elevation, dict) and "path" in scenario.elevation:
        scenario.elevation = dict(scenario.elevation)
        scenario.elevation["path"] = _resolve_path(path, scenario.elevation["path"])
    return scenario


def _resolve_path(config_path: str, value: str) -> str:
    if os.path.isabs(value):
        return value
    return os.path.join(os.path.dirname(os.path.abspath(config_path)), value)


def _read_json(path: str):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError as exc:
        raise ScenarioError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
