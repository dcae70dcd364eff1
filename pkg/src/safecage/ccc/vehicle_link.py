"""Vehicle side of the wire protocol: connect a SimRunner to the hub.

Sends one StateUpdate per cage tick and turns received commands into
pending mode-control fragments which apply on the next tick.  Loss of
the hub connection is surfaced to the runtime via link_ok, which latches
an emergency stop if the vehicle is under remote manual control.
"""

from __future__ import annotations

import asyncio
import logging

from ..geometry import Gear
from ..modes import CageMode, DrivingMode
from ..protocol import (KIND_COMMAND_REQUEST, KIND_STATE_UPDATE, KIND_TELEOP,
                        FrameDecoder, SequenceSource, WireMessage, encode_frame)
from ..runtime import CommandFragment, state_update_payload
from ..sim.scenario import SimRunner

log = logging.getLogger(__name__)


class LinkMonitor:
    """Declares the link down once nothing was heard for timeout_s."""

    def __init__(self, timeout_s: float):
        self.timeout_s = timeout_s
        self.last_rx: float | None = None

    def note_rx(self, t: float) -> None:
        self.last_rx = t

    def ok(self, t: float) -> bool:
        return self.last_rx is not None and t - self.last_rx <= self.timeout_s


def apply_wire_command(runner: SimRunner, msg: WireMessage) -> None:
    payload = msg.payload
    has_control = bool(payload.get("has_control"))
    if msg.kind == KIND_TELEOP:
        runner.teleop = (float(payload.get("steer", 0.0)),
                         float(payload.get("accel", 0.0)))
        return
    if msg.kind != KIND_COMMAND_REQUEST:
        return
    action = payload.get("action")
    if action == "request":
        runner.pending.append(CommandFragment(
            cage_request=CageMode(payload["cage"]) if payload.get("cage") else None,
            mode_request=DrivingMode(payload["mode"]) if payload.get("mode") else None,
            requester_has_control=has_control))
    elif action == "activate_destination":
        runner.activate_destination(str(payload.get("id")))


async def run_vehicle_link(runner: SimRunner, vehicle_id: str, host: str,
                           port: int, realtime: bool = True,
                           max_ticks: int | None = None) -> None:
    """Drive the simulation and speak the protocol until cancelled."""
    reader, writer = await asyncio.open_connection(host, port)
    seq = SequenceSource()
    decoder = FrameDecoder()
    tick_period = 1.0 / runner.cfg.tick_rate_hz
    monitor = LinkMonitor(runner.cfg.link_timeout_s)
    monitor.note_rx(runner.t)

    async def pump_in():
        try:
            while True:
                data = await reader.read(65536)
                if not data:
                    break
                monitor.note_rx(runner.t)
                for msg in decoder.feed(data):
                    apply_wire_command(runner, msg)
        except ConnectionResetError:
            pass

    in_task = asyncio.ensure_future(pump_in())
    ticks = 0
    try:
        while max_ticks is None or ticks < max_ticks:
            # a healthy TCP connection counts as link contact
            if not in_task.done():
                monitor.note_rx(runner.t)
            runner.link_ok = monitor.ok(runner.t)
            report = runner.step_tick()
            payload = state_update_payload(report, runner._last_sensors)
            msg = WireMessage(kind=KIND_STATE_UPDATE, vehicle_id=vehicle_id,
                              sender=vehicle_id,
                              sequence=seq.next(vehicle_id, vehicle_id),
                              payload=payload)
            try:
                writer.write(encode_frame(msg))
                await writer.drain()
            except ConnectionResetError:
                break
            ticks += 1
            if realtime:
                await asyncio.sleep(tick_period)
            else:
                await asyncio.sleep(0)
    finally:
        in_task.cancel()
        writer.close()
