"""The routing substrate: an undirected geospatial graph with per-edge length
and directional elevation gain, prunable against fire polygons.

Graphs are treated as immutable after construction; ``prune`` and
``augment_elevation`` return new graphs and never modify their input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

from .errors import ContractError
from .geo import FirePolygon, GeoPoint, haversine, interpolate, point_in_polygon

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphNode:
    point: GeoPoint
    elevation_m: float = 0.0


@dataclass(frozen=True)
class GraphEdge:
    """Undirected edge attributes, keyed by the canonical (u, v) pair with u < v.

    ``gain_fwd`` is the uphill gain traversing u -> v, ``gain_rev`` the gain
    traversing v -> u. Both are non-negative.
    """

    length_m: float
    gain_fwd: float = 0.0
    gain_rev: float = 0.0


def _edge_key(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u <= v else (v, u)


@dataclass
class GroundGraph:
    nodes: dict[str, GraphNode] = field(default_factory=dict)
    edges: dict[tuple[str, str], GraphEdge] = field(default_factory=dict)
    _adj: dict[str, list[str]] = field(default_factory=dict, repr=False)

    @classmethod
    def build(
        cls,
        nodes: dict[str, GraphNode],
        edges: dict[tuple[str, str], GraphEdge],
    ) -> "GroundGraph":
        for (u, v), attrs in edges.items():
            if u not in nodes:
                raise ContractError(f"edge ({u}, {v}) references missing node {u!r}")
            if v not in nodes:
                raise ContractError(f"edge ({u}, {v}) references missing node {v!r}")
            if attrs.length_m <= 0:
                raise ContractError(f"edge ({u}, {v}) has non-positive length {attrs.length_m}")
        g = cls(nodes=dict(nodes), edges={_edge_key(u, v): e for (u, v), e in edges.items()})
        g._rebuild_adjacency()
        return g

    def _rebuild_adjacency(self) -> None:
        adj: dict[str, list[str]] = {n: [] for n in self.nodes}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        # Sorted neighbour lists keep traversal order independent of dict history.
        self._adj = {n: sorted(ns) for n, ns in adj.items()}

    def neighbors(self, node_id: str) -> list[str]:
        return self._adj.get(node_id, [])

    def edge(self, u: str, v: str) -> GraphEdge:
        return self.edges[_edge_key(u, v)]

    def edge_length(self, u: str, v: str) -> float:
        return self.edge(u, v).length_m

    def gain(self, u: str, v: str) -> float:
        """Elevation gain traversing u -> v."""
        e = self.edge(u, v)
        return e.gain_fwd if (u, v) == _edge_key(u, v) else e.gain_rev

    def node_point(self, node_id: str) -> GeoPoint:
        return self.nodes[node_id].point

    def warn_on_short_edges(self) -> list[tuple[str, str]]:
        """Edges with declared length below the endpoint geodesic distance make
        the routing heuristic inadmissible; warn and return them."""
        bad = []
        for (u, v), e in self.edges.items():
            geo_d = haversine(self.nodes[u].point, self.nodes[v].point)
            if e.length_m < geo_d * (1.0 - 1e-9):
                bad.append((u, v))
        if bad:
            log.warning(
                "%d edge(s) shorter than the geodesic distance between their "
                "endpoints; route optimality is not guaranteed: %s",
                len(bad),
                bad[:5],
            )
        return bad


def prune(g: GroundGraph, fires: list[FirePolygon], crossing_edges: bool = False) -> GroundGraph:
    """Remove every node strictly inside any fire polygon, with incident edges.

    With ``crossing_edges`` set, edges whose straight segment crosses a fire
    boundary are removed too, even when both endpoints are outside. The input
    graph is left unmodified.
    """
    burnt = {
        nid for nid, node in g.nodes.items() if any(point_in_polygon(node.point, f) for f in fires)
    }
    nodes = {nid: n for nid, n in g.nodes.items() if nid not in burnt}
    edges = {
        (u, v): e for (u, v), e in g.edges.items() if u not in burnt and v not in burnt
    }
    if crossing_edges:
        edges = {
            (u, v): e
            for (u, v), e in edges.items()
            if not any(_segment_crosses(g.nodes[u].point, g.nodes[v].point, f) for f in fires)
        }
    out = GroundGraph(nodes=nodes, edges=edges)
    out._rebuild_adjacency()
    return out


def _segment_crosses(a: GeoPoint, b: GeoPoint, poly: FirePolygon) -> bool:
    from .geo import _segments_intersect  # planar test shared with ring validation

    rings = (poly.exterior,) + poly.holes
    for ring in rings:
        n = len(ring)
        for i in range(n):
            if _segments_intersect(a, b, ring[i], ring[(i + 1) % n]):
                return True
    return False


def augment_elevation(
    g: GroundGraph,
    provider,
    samples_per_edge: int = 0,
    mode: str = "endpoint",
) -> GroundGraph:
    """Assign node elevations from ``provider`` and compute directional gains.

    ``provider`` is anything with ``elevation_at(point) -> float``. In the
    default ``endpoint`` mode the gain for u -> v is max(0, h(v) - h(u)). In
    ``piecewise`` mode, ``samples_per_edge`` interior points are interpolated
    along each edge and the positive elevation deltas between consecutive
    sample points are summed, per traversal direction.
    """
    if samples_per_edge < 0:
        raise ContractError("samples_per_edge must be >= 0")
    if mode not in ("endpoint", "piecewise"):
        raise ContractError(f"unknown elevation gain mode {mode!r}")

    nodes: dict[str, GraphNode] = {}
    for nid, node in g.nodes.items():
        try:
            h = float(provider.elevation_at(node.point))
        except Exception as exc:
            raise ContractError(f"elevation lookup failed for node {nid!r}: {exc}") from exc
        nodes[nid] = replace(node, elevation_m=h)

    edges: dict[tuple[str, str], GraphEdge] = {}
    for (u, v), e in g.edges.items():
        pu, pv = nodes[u].point, nodes[v].point
        if mode == "endpoint":
            hu, hv = nodes[u].elevation_m, nodes[v].elevation_m
            gain_fwd = max(0.0, hv - hu)
            gain_rev = max(0.0, hu - hv)
        else:
            heights = [nodes[u].elevation_m]
            for i in range(1, samples_per_edge + 1):
                p = interpolate(pu, pv, i / (samples_per_edge + 1))
                try:
                    heights.append(float(provider.elevation_at(p)))
                except Exception as exc:
                    raise ContractError(
                        f"elevation lookup failed on edge ({u}, {v}) sample {i}: {exc}"
                    ) from exc
            heights.append(nodes[v].elevation_m)
            gain_fwd = sum(max(0.0, b - a) for a, b in zip(heights, heights[1:]))
            gain_rev = sum(max(0.0, a - b) for a, b in zip(heights, heights[1:]))
        edges[(u, v)] = replace(e, gain_fwd=gain_fwd, gain_rev=gain_rev)

    out = GroundGraph(nodes=nodes, edges=edges)
    out._rebuild_adjacency()
    return out


def nearest_node(g: GroundGraph, p: GeoPoint) -> str:
    """Node id minimizing the geodesic distance to ``p``; ties go to the
    lexicographically smallest id."""
    if not g.nodes:
        raise ContractError("nearest_node on an empty graph: no routable terrain")
    return min(g.nodes, key=lambda nid: (haversine(p, g.nodes[nid].point), nid))
