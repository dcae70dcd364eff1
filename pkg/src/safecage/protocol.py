"""Wire protocol: versioned JSON envelopes, length-prefixed framing.

Every message is a JSON object framed on the socket as a 4-byte
big-endian length followed by the UTF-8 payload.  The envelope carries a
protocol version, a message kind, the vehicle the message concerns, the
sender id, and a per-(sender, vehicle) strictly increasing sequence
number.  Unknown kinds are ignored by receivers (with a warning), never
faulted.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 8 * 1024 * 1024

KIND_STATE_UPDATE = "StateUpdate"
KIND_COMMAND_REQUEST = "CommandRequest"
KIND_COMMAND_ACK = "CommandAck"
KIND_CONTROL_GRANT = "ControlGrant"
KIND_CONTROL_DENY = "ControlDeny"
KIND_DESTINATION_LIST = "DestinationList"
KIND_TELEOP = "Teleop"

KNOWN_KINDS = frozenset({
    KIND_STATE_UPDATE, KIND_COMMAND_REQUEST, KIND_COMMAND_ACK,
    KIND_CONTROL_GRANT, KIND_CONTROL_DENY, KIND_DESTINATION_LIST,
    KIND_TELEOP,
})


@dataclass(frozen=True)
class WireMessage:
    kind: str
    vehicle_id: str
    sender: str
    sequence: int
    payload: dict
    version: int = PROTOCOL_VERSION

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "kind": self.kind,
            "vehicle_id": self.vehicle_id,
            "sender": self.sender,
            "sequence": self.sequence,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "WireMessage":
        if obj.get("version") != PROTOCOL_VERSION:
            raise ValueError(f"unsupported protocol version: {obj.get('version')!r}")
        return cls(kind=str(obj["kind"]), vehicle_id=str(obj["vehicle_id"]),
                   sender=str(obj["sender"]), sequence=int(obj["sequence"]),
                   payload=dict(obj.get("payload") or {}))


def encode_frame(msg: WireMessage) -> bytes:
    body = json.dumps(msg.to_dict(), separators=(",", ":"), sort_keys=True).encode()
    return struct.pack(">I", len(body)) + body


class FrameDecoder:
    """Incremental decoder for length-prefixed frames."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[WireMessage]:
        self._buf.extend(data)
        out: list[WireMessage] = []
        while True:
            if len(self._buf) < 4:
                return out
            (length,) = struct.unpack_from(">I", self._buf)
            if length > MAX_FRAME_BYTES:
                raise ValueError(f"frame of {length} bytes exceeds limit")
            if len(self._buf) < 4 + length:
                return out
            body = bytes(self._buf[4:4 + length])
            del self._buf[:4 + length]
            out.append(WireMessage.from_dict(json.loads(body)))


class SequenceTracker:
    """Drops stale or duplicate sequences per (sender, vehicle) stream."""

    def __init__(self):
        self._last: dict[tuple[str, str], int] = {}

    def accept(self, msg: WireMessage) -> bool:
        key = (msg.sender, msg.vehicle_id)
        last = self._last.get(key, -1)
        if msg.sequence <= last:
            log.warning("dropping stale sequence %d <= %d from %s/%s",
                        msg.sequence, last, msg.sender, msg.vehicle_id)
            return False
        self._last[key] = msg.sequence
        return True


class SequenceSource:
    """Monotone sequence numbers for an outgoing (sender, vehicle) stream."""

    def __init__(self):
        self._next: dict[tuple[str, str], int] = {}

    def next(self, sender: str, vehicle_id: str) -> int:
        key = (sender, vehicle_id)
        seq = self._next.get(key, 0)
        self._next[key] = seq + 1
        return seq
