"""Command control center hub.

Accepts persistent connections from vehicles and operator sessions over
the length-prefixed TCP protocol (and, via the web bridge, WebSocket).
A connection that first sends a StateUpdate is a vehicle link; anything
else is an operator (CCC) session.  Telemetry fans out to every
operator session in order, through bounded per-session queues; slow
consumers are disconnected.  Commands are relayed to vehicles only from
the rights holder.
"""

from __future__ import annotations

import asyncio
import json
import logging
from dataclasses import dataclass, field

from ..protocol import (KIND_COMMAND_ACK, KIND_COMMAND_REQUEST, KIND_CONTROL_DENY,
                        KIND_CONTROL_GRANT, KIND_DESTINATION_LIST, KIND_STATE_UPDATE,
                        KIND_TELEOP, KNOWN_KINDS, FrameDecoder, SequenceSource,
                        SequenceTracker, WireMessage, encode_frame)
from .registry import FleetRegistry

log = logging.getLogger(__name__)

SESSION_QUEUE_LIMIT = 256
HOLDER_DISCONNECT_RELEASE_S = 5.0
SERVICE_ID = "ccc-service"


@dataclass(eq=False)
class Session:
    """One connected peer; transport adapters drain the queue."""

    name: str
    queue: asyncio.Queue = field(default_factory=lambda: asyncio.Queue())
    role: str | None = None          # "vehicle" | "ccc"
    sender_id: str | None = None
    vehicle_id: str | None = None    # for vehicle links
    closed: bool = False

    def push(self, msg: WireMessage) -> bool:
        """Enqueue for delivery; False means the session overflowed."""
        if self.closed:
            return False
        if self.queue.qsize() >= SESSION_QUEUE_LIMIT:
            return False
        self.queue.put_nowait(msg)
        return True

    def close(self) -> None:
        self.closed = True
        self.queue.put_nowait(None)  # sentinel wakes the writer


class CccService:
    def __init__(self, registry: FleetRegistry | None = None,
                 audit_path: str | None = None):
        self.registry = registry or FleetRegistry()
        self.sessions: set[Session] = set()
        self.vehicle_links: dict[str, Session] = {}
        self._tracker = SequenceTracker()
        self._seq = SequenceSource()
        self._pending_acks: dict[str, list[tuple[Session, WireMessage]]] = {}
        self._release_tasks: dict[str, asyncio.Task] = {}
        self._audit_fh = open(audit_path, "a") if audit_path else None
        self._audit_cursor = 0

    # -- helpers -----------------------------------------------------------

    def _send(self, session: Session, kind: str, vehicle_id: str, payload: dict) -> None:
        msg = WireMessage(kind=kind, vehicle_id=vehicle_id, sender=SERVICE_ID,
                          sequence=self._seq.next(SERVICE_ID + ":" + session.name,
                                                  vehicle_id),
                          payload=payload)
        if not session.push(msg):
            log.warning("session %s overflowed, disconnecting", session.name)
            self.drop_session(session)

    def _audit_write(self) -> None:
        if self._audit_fh is None:
            return
        while self._audit_cursor < len(self.registry.audit):
            self._audit_fh.write(json.dumps(self.registry.audit[self._audit_cursor],
                                            sort_keys=True) + "\n")
            self._audit_cursor += 1
        self._audit_fh.flush()

    def _send_destinations(self, session: Session, vehicle_id: str) -> None:
        self._send(session, KIND_DESTINATION_LIST, vehicle_id,
                   {"destinations": self.registry.destinations(vehicle_id)})

    # -- session lifecycle ---------------------------------------------------

    def register_session(self, session: Session) -> None:
        self.sessions.add(session)

    def drop_session(self, session: Session) -> None:
        if session not in self.sessions:
            return
        self.sessions.discard(session)
        session.close()
        if session.role == "vehicle" and session.vehicle_id:
            self.vehicle_links.pop(session.vehicle_id, None)
            self.registry.set_connected(session.vehicle_id, False)
        if session.role == "ccc" and session.sender_id:
            self._schedule_holder_release(session.sender_id)

    def _schedule_holder_release(self, ccc_id: str) -> None:
        # another live session with the same id keeps the rights
        if any(s.sender_id == ccc_id and s.role == "ccc" for s in self.sessions):
            return

        async def _release_later():
            await asyncio.sleep(HOLDER_DISCONNECT_RELEASE_S)
            if not any(s.sender_id == ccc_id and s.role == "ccc" for s in self.sessions):
                self.registry.release_all(ccc_id)
                self._audit_write()

        try:
            self._release_tasks[ccc_id] = asyncio.get_running_loop().create_task(
                _release_later())
        except RuntimeError:
            self.registry.release_all(ccc_id)

    # -- message handling ------------------------------------------------------

    def on_message(self, session: Session, msg: WireMessage) -> None:
        if msg.kind not in KNOWN_KINDS:
            log.warning("ignoring unknown message kind %r from %s",
                        msg.kind, session.name)
            return
        if not self._tracker.accept(msg):
            return
        if session.role is None:
            session.sender_id = msg.sender
            if msg.kind == KIND_STATE_UPDATE:
                session.role = "vehicle"
                session.vehicle_id = msg.vehicle_id
                self.vehicle_links[msg.vehicle_id] = session
                self.registry.set_connected(msg.vehicle_id, True)
            else:
                session.role = "ccc"
                task = self._release_tasks.pop(msg.sender, None)
                if task:
                    task.cancel()
                for vid in self.registry.vehicle_ids():
                    self._send_destinations(session, vid)

        if msg.kind == KIND_STATE_UPDATE:
            self._on_state_update(msg)
        elif msg.kind == KIND_COMMAND_REQUEST:
            self._on_command(session, msg)
        elif msg.kind == KIND_TELEOP:
            self._relay_if_holder(session, msg)
        self._audit_write()

    def _on_state_update(self, msg: WireMessage) -> None:
        self.registry.note_state(msg.vehicle_id, msg.payload)
        for waiter, req in self._pending_acks.pop(msg.vehicle_id, []):
            self._send(waiter, KIND_COMMAND_ACK, msg.vehicle_id, {
                "correlates": req.sequence,
                "status": "accepted",
                "state": {k: msg.payload.get(k) for k in
                          ("Sensor Validity", "Mission State",
                           "Driving Mode", "Cage State")},
            })
        for s in list(self.sessions):
            if s.role == "ccc":
                if not s.push(msg):
                    log.warning("telemetry overflow on %s, disconnecting", s.name)
                    self.drop_session(s)

    def _reject(self, session: Session, msg: WireMessage, reason: str) -> None:
        self._send(session, KIND_COMMAND_ACK, msg.vehicle_id,
                   {"correlates": msg.sequence, "status": "rejected",
                    "reason": reason})

    def _relay_if_holder(self, session: Session, msg: WireMessage) -> bool:
        if not self.registry.is_holder(session.sender_id or "", msg.vehicle_id):
            return False
        link = self.vehicle_links.get(msg.vehicle_id)
        if link is None:
            return False
        payload = dict(msg.payload)
        payload["has_control"] = True
        self._send(link, msg.kind, msg.vehicle_id, payload)
        return True

    def _on_command(self, session: Session, msg: WireMessage) -> None:
        action = msg.payload.get("action")
        ccc_id = session.sender_id or ""
        vid = msg.vehicle_id

        if action == "acquire_control":
            granted, info = self.registry.acquire_control(ccc_id, vid)
            if granted and info == "already held":
                # only a fresh acquisition earns a grant message
                self._send(session, KIND_COMMAND_ACK, vid,
                           {"correlates": msg.sequence, "status": "accepted",
                            "reason": info})
            elif granted:
                self._send(session, KIND_CONTROL_GRANT, vid,
                           {"correlates": msg.sequence})
            else:
                self._send(session, KIND_CONTROL_DENY, vid,
                           {"correlates": msg.sequence, "holder": info})
            return
        if action == "release_control":
            self.registry.release_control(ccc_id, vid)
            self._send(session, KIND_COMMAND_ACK, vid,
                       {"correlates": msg.sequence, "status": "accepted"})
            return
        if action == "subscribe":
            self._send(session, KIND_COMMAND_ACK, vid,
                       {"correlates": msg.sequence, "status": "accepted"})
            return

        if not self.registry.is_holder(ccc_id, vid):
            self._reject(session, msg, f"control rights not held by {ccc_id}")
            return
        if self.vehicle_links.get(vid) is None:
            self._reject(session, msg, "vehicle not connected")
            return

        if action == "activate_destination":
            try:
                self.registry.activate_destination(vid, str(msg.payload.get("id")))
            except KeyError as exc:
                self._reject(session, msg, str(exc))
                return
            for s in list(self.sessions):
                if s.role == "ccc":
                    self._send_destinations(s, vid)
        elif action not in ("request",):
            self._reject(session, msg, f"unknown action: {action}")
            return

        self._relay_if_holder(session, msg)
        self._pending_acks.setdefault(vid, []).append((session, msg))


async def serve_tcp(service: CccService, host: str, port: int) -> asyncio.AbstractServer:
    """Listen for vehicles and operator sessions on the framed protocol."""

    async def handle(reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        peer = writer.get_extra_info("peername")
        session = Session(name=f"tcp:{peer}")
        service.register_session(session)

        async def pump_out():
            while True:
                msg = await session.queue.get()
                if msg is None:
                    break
                writer.write(encode_frame(msg))
                await writer.drain()

        out_task = asyncio.ensure_future(pump_out())
        decoder = FrameDecoder()
        try:
            while True:
                data = await reader.read(65536)
                if not data:
                    break
                for msg in decoder.feed(data):
                    service.on_message(session, msg)
        except (ConnectionResetError, ValueError) as exc:
            log.info("connection %s dropped: %s", session.name, exc)
        finally:
            service.drop_session(session)
            out_task.cancel()
            writer.close()

    return await asyncio.start_server(handle, host, port)
