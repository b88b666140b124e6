"""Evacuation requests, their status lifecycle, the per-coordinator FIFO
pipeline queues, and the replicated in-process request store.

The store replaces an external consensus-backed database with the one
property the rest of the system relies on: an acknowledged write exists on
``min(k, live)`` replicas chosen in a fixed ring order, every live replica
holding a row sees each later update, and reads from any live replica agree.
Operations are atomic with respect to each other (serialized by the event
loop in simulation; guarded by a lock in wall-clock mode).
"""

from __future__ import annotations

import random
import threading
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import ContractError, RequestNotFound, StateError, StoreUnavailable
from .geo import GeoPoint, haversine
from .router import Route


class Status(Enum):
    PENDING = "PENDING"
    ACTIVE = "ACTIVE"
    PROCESSED = "PROCESSED"


_ORDER = {Status.PENDING: 0, Status.ACTIVE: 1, Status.PROCESSED: 2}


@dataclass(frozen=True)
class EvacuationRequest:
    """One detected evacuee, tracked from detection to arrival.

    Timestamps are simulation seconds. ``stored_at`` stays None until the
    request is written to the replicated store. Instances are immutable;
    lifecycle helpers return updated copies, which is what lets replicas
    hold genuinely independent snapshots.
    """

    request_id: str
    detected_at: float
    detection_point: GeoPoint
    safe_locations: tuple[GeoPoint, ...]
    sd_id: str
    receiving_cd: str
    processing_cd: str
    route_waypoints: tuple[GeoPoint, ...] = ()
    last_position: GeoPoint | None = None
    last_update_at: float = 0.0
    next_waypoint_index: int = 0
    route_length_m: float = 0.0
    status: Status = Status.PENDING
    stored_at: float | None = None

    def __post_init__(self) -> None:
        if self.next_waypoint_index < 0:
            raise ContractError("next_waypoint_index must be >= 0")
        if self.next_waypoint_index > len(self.route_waypoints) and self.route_waypoints:
            raise ContractError("next_waypoint_index beyond route end")
        if self.stored_at is not None and self.stored_at < self.detected_at:
            raise ContractError("stored_at cannot precede detected_at")
        if self.last_update_at < self.detected_at:
            raise ContractError("last_update_at cannot precede detected_at")
        if self.status is Status.ACTIVE and not self.route_waypoints:
            raise ContractError("ACTIVE request requires a route")


def new_request_id(rng: random.Random) -> str:
    """128-bit identifier drawn from the seeded RNG, so runs replay exactly."""
    return f"{rng.getrandbits(128):032x}"


def create_request(
    rng: random.Random,
    sd_id: str,
    detected_at: float,
    detection_point: GeoPoint,
    receiving_cd: str,
    safes: list[GeoPoint],
) -> EvacuationRequest:
    """Fresh PENDING request. The processing coordinator starts out as the
    receiving one; redistribution may reassign it later."""
    return EvacuationRequest(
        request_id=new_request_id(rng),
        detected_at=detected_at,
        detection_point=detection_point,
        safe_locations=tuple(safes),
        sd_id=sd_id,
        receiving_cd=receiving_cd,
        processing_cd=receiving_cd,
        last_position=detection_point,
        last_update_at=detected_at,
    )


def activate(req: EvacuationRequest, route: Route, t_now: float) -> EvacuationRequest:
    """PENDING -> ACTIVE with the planned route attached."""
    if req.status is not Status.PENDING:
        raise StateError(f"cannot activate request in state {req.status.value}")
    return replace(
        req,
        status=Status.ACTIVE,
        route_waypoints=tuple(route.waypoints),
        route_length_m=route.length_m,
        next_waypoint_index=0,
        last_update_at=max(req.last_update_at, t_now),
    )


@dataclass
class FifoQueue:
    """Unbounded FIFO with enqueue timestamps, for queue-wait accounting."""

    name: str
    _items: deque = field(default_factory=deque)

    def push(self, item, t_now: float) -> None:
        self._items.append((t_now, item))

    def pop(self, t_now: float) -> tuple[object, float]:
        """Returns (item, wait time spent in queue)."""
        enq_t, item = self._items.popleft()
        return item, t_now - enq_t

    def __len__(self) -> int:
        return len(self._items)

    def drain(self) -> list:
        items = [item for _, item in self._items]
        self._items.clear()
        return items


@dataclass
class WriteAck:
    replicas: tuple[str, ...]
    degraded: bool  # true when fewer than k live replicas could be reached


class ReplicatedStore:
    """Synchronous-replication request store across coordinator drones.

    Placement: a write lands on the inserting CD plus the next k-1 live CDs
    in a fixed ring (the sorted CD id order). Updates apply to every live
    replica currently holding the row. Queries scan live replicas and
    deduplicate by request id, which is safe because live holders are kept
    identical by construction.
    """

    def __init__(self, cd_ids: list[str], replication_factor: int = 3,
                 arrival_tolerance_m: float = 5.0):
        if replication_factor < 1:
            raise ContractError("replication_factor must be >= 1")
        self.ring: list[str] = sorted(cd_ids)
        self.k = replication_factor
        self.arrival_tolerance_m = arrival_tolerance_m
        self.tables: dict[str, dict[str, EvacuationRequest]] = {cd: {} for cd in self.ring}
        self.live: dict[str, bool] = {cd: True for cd in self.ring}
        self.insert_log: list[tuple[float, str]] = []  # (t, request_id)
        self.update_log: list[tuple[float, str]] = []
        self._lock = threading.Lock()

    # -- liveness -----------------------------------------------------------

    def mark_dead(self, cd_id: str) -> None:
        with self._lock:
            self.live[cd_id] = False

    def live_replicas(self) -> list[str]:
        return [cd for cd in self.ring if self.live[cd]]

    # -- writes -------------------------------------------------------------

    def insert(self, cd_id: str, req: EvacuationRequest, t_now: float) -> WriteAck:
        with self._lock:
            if not self.live.get(cd_id, False):
                raise StoreUnavailable(f"inserting coordinator {cd_id} is not live")
            targets = self._placement(cd_id)
            if not targets:
                raise StoreUnavailable("no live replica available for insert")
            stored = replace(
                req,
                stored_at=t_now,
                last_update_at=max(req.last_update_at, t_now),
            )
            for cd in targets:
                self.tables[cd][stored.request_id] = stored
            self.insert_log.append((t_now, stored.request_id))
            return WriteAck(replicas=tuple(targets), degraded=len(targets) < self.k)

    def _placement(self, cd_id: str) -> list[str]:
        """Inserting CD first, then the next live CDs around the ring."""
        start = self.ring.index(cd_id)
        ordered = self.ring[start:] + self.ring[:start]
        return [cd for cd in ordered if self.live[cd]][: self.k]

    def update_location(
        self, request_id: str, position: GeoPoint, t_now: float, next_index: int
    ) -> WriteAck:
        with self._lock:
            holders = self._live_holders(request_id)
            current = self.tables[holders[0]][request_id]
            if current.status is Status.PROCESSED:
                raise StateError("cannot update location of a PROCESSED request")
            if current.status is not Status.ACTIVE:
                raise StateError("location updates require an ACTIVE request")
            if next_index < current.next_waypoint_index:
                raise StateError(
                    f"waypoint index must not decrease "
                    f"({current.next_waypoint_index} -> {next_index})"
                )
            updated = replace(
                current,
                last_position=position,
                last_update_at=t_now,
                next_waypoint_index=next_index,
            )
            for cd in holders:
                self.tables[cd][request_id] = updated
            self.update_log.append((t_now, request_id))
            return WriteAck(replicas=tuple(holders), degraded=len(holders) < self.k)

    def update_processor(self, request_id: str, new_cd: str, t_now: float) -> WriteAck:
        """Reassign the processing coordinator (used by failure recovery)."""
        with self._lock:
            holders = self._live_holders(request_id)
            current = self.tables[holders[0]][request_id]
            updated = replace(current, processing_cd=new_cd)
            for cd in holders:
                self.tables[cd][request_id] = updated
            return WriteAck(replicas=tuple(holders), degraded=len(holders) < self.k)

    def mark_processed(self, request_id: str, t_now: float) -> WriteAck:
        with self._lock:
            holders = self._live_holders(request_id)
            current = self.tables[holders[0]][request_id]
            if current.status is not Status.ACTIVE:
                raise StateError(f"cannot process a {current.status.value} request")
            final_wp = current.route_waypoints[-1]
            distance = haversine(current.last_position, final_wp)
            if distance > self.arrival_tolerance_m:
                raise StateError(
                    f"evacuee is {distance:.1f} m from the final waypoint "
                    f"(tolerance {self.arrival_tolerance_m} m)"
                )
            updated = replace(current, status=Status.PROCESSED, last_update_at=t_now)
            for cd in holders:
                self.tables[cd][request_id] = updated
            self.update_log.append((t_now, request_id))
            return WriteAck(replicas=tuple(holders), degraded=len(holders) < self.k)

    def _live_holders(self, request_id: str) -> list[str]:
        live = self.live_replicas()
        if not live:
            raise StoreUnavailable("no live replicas")
        holders = [cd for cd in live if request_id in self.tables[cd]]
        if not holders:
            raise RequestNotFound(request_id)
        return holders

    # -- reads --------------------------------------------------------------

    def get(self, request_id: str) -> EvacuationRequest:
        with self._lock:
            holders = self._live_holders(request_id)
            return self.tables[holders[0]][request_id]

    def query(
        self,
        by_processor: str | None = None,
        by_status: Status | None = None,
        by_request_id: str | None = None,
    ) -> list[EvacuationRequest]:
        """Filter across live replicas; deterministic (stored_at, id) order."""
        with self._lock:
            live = self.live_replicas()
            if not live:
                raise StoreUnavailable("no live replicas")
            seen: dict[str, EvacuationRequest] = {}
            for cd in live:
                for rid, req in self.tables[cd].items():
                    if rid not in seen:
                        seen[rid] = req
            rows = [
                r
                for r in seen.values()
                if (by_processor is None or r.processing_cd == by_processor)
                and (by_status is None or r.status is by_status)
                and (by_request_id is None or r.request_id == by_request_id)
            ]
            rows.sort(key=lambda r: (r.stored_at if r.stored_at is not None else -1.0,
                                     r.request_id))
            return rows

    def total_rows(self) -> int:
        ids = set()
        for cd in self.live_replicas():
            ids.update(self.tables[cd])
        return len(ids)
