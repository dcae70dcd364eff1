"""Fleet registry: control rights, latest vehicle state, destinations.

All decisions (acquire/release/authorize/destination changes) are taken
under one lock, so the rights table behaves as a single serialized
decision point.  Every decision is appended to an audit log.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from enum import Enum


class DestinationStatus(Enum):
    PENDING = "Pending"
    ACTIVE_TARGET = "ActiveTarget"
    REACHED = "Reached"


@dataclass
class DestinationEntry:
    id: str
    name: str
    x: float
    y: float
    status: DestinationStatus = DestinationStatus.PENDING

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "x": self.x, "y": self.y,
                "status": self.status.value}


@dataclass
class FleetEntry:
    vehicle_id: str
    connected: bool = False
    controlling_ccc: str | None = None
    latest_state: dict | None = None
    destinations: list[DestinationEntry] = field(default_factory=list)


class FleetRegistry:
    def __init__(self):
        self._lock = threading.Lock()
        self._vehicles: dict[str, FleetEntry] = {}
        self.audit: list[dict] = []

    def _audit(self, **fields) -> None:
        rec = {"ts": time.time()}
        rec.update(fields)
        self.audit.append(rec)

    def add_vehicle(self, vehicle_id: str,
                    destinations: list[dict] | None = None) -> None:
        with self._lock:
            entry = self._vehicles.setdefault(vehicle_id, FleetEntry(vehicle_id))
            for d in destinations or []:
                entry.destinations.append(DestinationEntry(
                    id=str(d["id"]), name=d.get("name", str(d["id"])),
                    x=float(d.get("x", 0.0)), y=float(d.get("y", 0.0))))

    def vehicle_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._vehicles)

    def set_connected(self, vehicle_id: str, connected: bool) -> None:
        with self._lock:
            entry = self._vehicles.setdefault(vehicle_id, FleetEntry(vehicle_id))
            entry.connected = connected

    def note_state(self, vehicle_id: str, payload: dict) -> None:
        with self._lock:
            entry = self._vehicles.setdefault(vehicle_id, FleetEntry(vehicle_id))
            entry.connected = True
            entry.latest_state = payload
            if payload.get("Mission State") == "Completed":
                for d in entry.destinations:
                    if d.status is DestinationStatus.ACTIVE_TARGET:
                        d.status = DestinationStatus.REACHED

    def latest_state(self, vehicle_id: str) -> dict | None:
        with self._lock:
            entry = self._vehicles.get(vehicle_id)
            return entry.latest_state if entry else None

    # -- control rights ------------------------------------------------

    def acquire_control(self, ccc_id: str, vehicle_id: str) -> tuple[bool, str | None]:
        """Returns (granted, holder-or-reason)."""
        with self._lock:
            entry = self._vehicles.get(vehicle_id)
            if entry is None:
                self._audit(op="acquire", ccc=ccc_id, vehicle=vehicle_id,
                            granted=False, reason="unknown vehicle")
                return False, "unknown vehicle"
            if entry.controlling_ccc == ccc_id:
                return True, "already held"
            if entry.controlling_ccc is not None:
                self._audit(op="acquire", ccc=ccc_id, vehicle=vehicle_id,
                            granted=False, holder=entry.controlling_ccc)
                return False, entry.controlling_ccc
            entry.controlling_ccc = ccc_id
            self._audit(op="acquire", ccc=ccc_id, vehicle=vehicle_id, granted=True)
            return True, None

    def release_control(self, ccc_id: str, vehicle_id: str) -> bool:
        with self._lock:
            entry = self._vehicles.get(vehicle_id)
            if entry is None or entry.controlling_ccc != ccc_id:
                return False
            entry.controlling_ccc = None
            self._audit(op="release", ccc=ccc_id, vehicle=vehicle_id)
            return True

    def holder(self, vehicle_id: str) -> str | None:
        with self._lock:
            entry = self._vehicles.get(vehicle_id)
            return entry.controlling_ccc if entry else None

    def is_holder(self, ccc_id: str, vehicle_id: str) -> bool:
        return self.holder(vehicle_id) == ccc_id

    def release_all(self, ccc_id: str) -> list[str]:
        """Release every vehicle the CCC holds (holder disconnect)."""
        released = []
        with self._lock:
            for entry in self._vehicles.values():
                if entry.controlling_ccc == ccc_id:
                    entry.controlling_ccc = None
                    released.append(entry.vehicle_id)
                    self._audit(op="release", ccc=ccc_id,
                                vehicle=entry.vehicle_id, reason="disconnect")
        return released

    # -- destinations ----------------------------------------------------

    def destinations(self, vehicle_id: str) -> list[dict]:
        with self._lock:
            entry = self._vehicles.get(vehicle_id)
            return [d.to_dict() for d in entry.destinations] if entry else []

    def activate_destination(self, vehicle_id: str, dest_id: str) -> dict:
        with self._lock:
            entry = self._vehicles.get(vehicle_id)
            if entry is None:
                raise KeyError(f"unknown vehicle: {vehicle_id}")
            target = None
            for d in entry.destinations:
                if d.id == dest_id:
                    target = d
            if target is None:
                raise KeyError(f"unknown destination: {dest_id}")
            for d in entry.destinations:
                if d.status is DestinationStatus.ACTIVE_TARGET:
                    d.status = DestinationStatus.PENDING
            target.status = DestinationStatus.ACTIVE_TARGET
            self._audit(op="activate_destination", vehicle=vehicle_id, dest=dest_id)
            return target.to_dict()
