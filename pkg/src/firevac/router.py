"""Escape-route planning: weighted A* over the pruned ground graph.

The per-edge traversal weight is ``alpha * length + beta * uphill_gain`` with
the gain taken in the direction of travel, and the heuristic is
``alpha * geodesic_distance(node, goal)``. The heuristic stays admissible as
long as declared edge lengths are at least the geodesic distance between
their endpoints (warned at graph load otherwise). Safe locations are tried
in ascending order of geodesic distance from the origin node; the first goal
with any path wins.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

from .errors import ContractError
from .geo import GeoPoint, haversine
from .ground_map import GroundGraph, nearest_node


@dataclass(frozen=True)
class CostWeights:
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ContractError("alpha and beta must be >= 0")
        if self.alpha == 0 and self.beta == 0:
            raise ContractError("alpha and beta cannot both be zero")


@dataclass(frozen=True)
class Route:
    """A planned escape path over graph nodes, origin first, goal node last."""

    node_ids: tuple[str, ...]
    waypoints: tuple[GeoPoint, ...]
    length_m: float
    cost: float
    goal: GeoPoint
    expansions: int = 0  # A* nodes expanded while finding this route


@dataclass(frozen=True)
class NoRouteFound:
    """Normal planning outcome when no safe location is reachable. Carries
    the goals that were attempted so the base-station escalation can report
    them."""

    attempted_goals: tuple[GeoPoint, ...]


def plan_escape_route(
    g: GroundGraph,
    origin: GeoPoint,
    safes: list[GeoPoint],
    weights: CostWeights,
) -> Route | NoRouteFound:
    """Plan a route from the node nearest ``origin`` to the first reachable
    safe location, nearest first."""
    if not safes:
        raise ContractError("at least one safe location is required")
    origin_node = nearest_node(g, origin)
    origin_point = g.node_point(origin_node)

    goals = [(safe, nearest_node(g, safe), i) for i, safe in enumerate(safes)]
    goals.sort(key=lambda sg: (haversine(origin_point, g.node_point(sg[1])), sg[2]))

    for safe, goal_node, _ in goals:
        found = _astar(g, origin_node, goal_node, weights)
        if found is not None:
            node_ids, cost, expansions = found
            length = sum(
                g.edge_length(a, b) for a, b in zip(node_ids, node_ids[1:])
            )
            return Route(
                node_ids=tuple(node_ids),
                waypoints=tuple(g.node_point(n) for n in node_ids),
                length_m=length,
                cost=cost,
                goal=safe,
                expansions=expansions,
            )
    return NoRouteFound(attempted_goals=tuple(s for s, _, _ in goals))


def route_length(route: Route) -> float:
    """Total traversed edge length in meters."""
    return route.length_m


def _astar(
    g: GroundGraph, start: str, goal: str, w: CostWeights
) -> tuple[list[str], float, int] | None:
    """Weighted A*. Returns (path nodes, path cost, expansion count) or None
    when the goal is unreachable. Equal f-scores pop in insertion order, so
    results are deterministic. Nodes may be re-expanded if a cheaper path
    appears later, which keeps the search optimal even if a short declared
    edge length makes the heuristic locally inadmissible."""
    goal_point = g.node_point(goal)

    def heuristic(node: str) -> float:
        return w.alpha * haversine(g.node_point(node), goal_point)

    counter = itertools.count()
    best_g: dict[str, float] = {start: 0.0}
    parent: dict[str, str | None] = {start: None}
    frontier: list[tuple[float, int, str, float]] = [
        (heuristic(start), next(counter), start, 0.0)
    ]
    expansions = 0

    while frontier:
        _, _, node, node_g = heapq.heappop(frontier)
        if node_g > best_g.get(node, float("inf")):
            continue  # stale queue entry
        expansions += 1
        if node == goal:
            path = []
            cur: str | None = node
            while cur is not None:
                path.append(cur)
                cur = parent[cur]
            path.reverse()
            return path, node_g, expansions
        for nb in g.neighbors(node):
            edge = g.edge(node, nb)
            step = w.alpha * edge.length_m + w.beta * g.gain(node, nb)
            cand = node_g + step
            if cand < best_g.get(nb, float("inf")):
                best_g[nb] = cand
                parent[nb] = node
                heapq.heappush(frontier, (cand + heuristic(nb), next(counter), nb, cand))
    return None
