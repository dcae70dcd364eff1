"""Record/replay format for cage runtime ticks.

A recording is newline-delimited JSON: one header object followed by one
object per tick, carrying the exact sensor inputs, pending commands, and
the runtime outputs.  Replaying feeds the recorded inputs through a
fresh runtime and checks the recomputed outputs tick by tick.
"""

from __future__ import annotations

import base64
import dataclasses
import json
from pathlib import Path
from typing import Iterator

import numpy as np

from .camera import CameraFrame, CameraId, ValidatorConfig, Validity
from .geometry import Gear, SafeZoneConfig, VehicleState
from .lidar import DetectorConfig, PointCloud
from .modes import CageMode, DrivingMode, MissionState, ModeState
from .runtime import (ActuatorCommand, ActuatorKind, CageRuntime, CageTickReport,
                      CommandFragment, RuntimeConfig, SensorBundle)

RECORD_SCHEMA_VERSION = 1


def runtime_config_to_dict(cfg: RuntimeConfig) -> dict:
    return {
        "zone": dataclasses.asdict(cfg.zone),
        "detector": dataclasses.asdict(cfg.detector),
        "validator": {
            "default_threshold": cfg.validator.default_threshold,
            "per_camera": {c.value: t for c, t in cfg.validator.per_camera.items()},
            "require_all_cameras": cfg.validator.require_all_cameras,
        },
        "tick_rate_hz": cfg.tick_rate_hz,
        "link_timeout_s": cfg.link_timeout_s,
        "limited_speed_cap": cfg.limited_speed_cap,
        "stale_after_ticks": cfg.stale_after_ticks,
    }


def runtime_config_from_dict(obj: dict) -> RuntimeConfig:
    validator = obj.get("validator", {})
    return RuntimeConfig(
        zone=SafeZoneConfig(**obj.get("zone", {})),
        detector=DetectorConfig(**obj.get("detector", {})),
        validator=ValidatorConfig(
            default_threshold=validator.get("default_threshold", 100.0),
            per_camera={CameraId(c): t
                        for c, t in validator.get("per_camera", {}).items()},
            require_all_cameras=validator.get("require_all_cameras", True),
        ),
        tick_rate_hz=obj.get("tick_rate_hz", 20.0),
        link_timeout_s=obj.get("link_timeout_s", 2.0),
        limited_speed_cap=obj.get("limited_speed_cap", 1.5),
        stale_after_ticks=obj.get("stale_after_ticks", 2),
    )


def _sensors_to_dict(s: SensorBundle) -> dict:
    cams = {}
    for cam, frame in s.cameras.items():
        cams[cam.value] = {"width": frame.width, "height": frame.height,
                           "timestamp_ns": frame.timestamp_ns,
                           "gray8_b64": base64.b64encode(frame.pixels.tobytes()).decode()}
    return {
        "vehicle": {"speed": s.vehicle.speed, "steering": s.vehicle.steering_angle,
                    "x": s.vehicle.x, "y": s.vehicle.y, "heading": s.vehicle.heading,
                    "gear": s.vehicle.gear.value},
        "cloud": None if s.cloud is None else
                 {"timestamp_ns": s.cloud.timestamp_ns,
                  "points": s.cloud.points.tolist()},
        "cameras": cams,
        "timestamp_ns": s.timestamp_ns,
        "at_destination": s.at_destination,
        "destination_active": s.destination_active,
        "link_ok": s.link_ok,
    }


def _sensors_from_dict(obj: dict) -> SensorBundle:
    veh = obj["vehicle"]
    cloud = obj.get("cloud")
    cams = {}
    for name, c in obj.get("cameras", {}).items():
        raw = np.frombuffer(base64.b64decode(c["gray8_b64"]), dtype=np.uint8)
        cams[CameraId(name)] = CameraFrame(width=c["width"], height=c["height"],
                                           pixels=raw, camera_id=CameraId(name),
                                           timestamp_ns=c.get("timestamp_ns", 0))
    return SensorBundle(
        vehicle=VehicleState(speed=veh["speed"], steering_angle=veh["steering"],
                             x=veh["x"], y=veh["y"], heading=veh["heading"],
                             gear=Gear(veh["gear"])),
        cloud=None if cloud is None else
              PointCloud(np.asarray(cloud["points"], dtype=float).reshape(-1, 3),
                         cloud["timestamp_ns"]),
        cameras=cams,
        timestamp_ns=obj.get("timestamp_ns", 0),
        at_destination=obj.get("at_destination", False),
        destination_active=obj.get("destination_active", False),
        link_ok=obj.get("link_ok", True),
    )


def _fragments_to_list(fragments: list[CommandFragment]) -> list[dict]:
    return [{"cage": f.cage_request.value if f.cage_request else None,
             "mode": f.mode_request.value if f.mode_request else None,
             "has_control": f.requester_has_control} for f in fragments]


def _fragments_from_list(items: list[dict]) -> list[CommandFragment]:
    return [CommandFragment(
        cage_request=CageMode(f["cage"]) if f.get("cage") else None,
        mode_request=DrivingMode(f["mode"]) if f.get("mode") else None,
        requester_has_control=bool(f.get("has_control"))) for f in items]


def report_outputs(report: CageTickReport) -> dict:
    """The replay-comparable slice of a tick report (no latency)."""
    return {
        "tick": report.tick_index,
        "occupancy": report.occupancy.value,
        "sensor_validity": report.sensor_validity.value,
        "camera_validity": {c.value: v.value for c, v in report.camera_valid.items()},
        "cage": report.mode_state.cage.value,
        "driving": report.mode_state.driving.value,
        "mission": report.mode_state.mission.value,
        "actuator": {"kind": report.actuator.kind.value, "value": report.actuator.value},
    }


class Recorder:
    def __init__(self, path: str | Path, cfg: RuntimeConfig):
        self._fh = open(path, "w")
        header = {"schema_version": RECORD_SCHEMA_VERSION, "kind": "cage-record",
                  "config": runtime_config_to_dict(cfg)}
        self._fh.write(json.dumps(header, sort_keys=True) + "\n")

    def write_tick(self, sensors: SensorBundle, pending: list[CommandFragment],
                   report: CageTickReport) -> None:
        line = {"sensors": _sensors_to_dict(sensors),
                "commands": _fragments_to_list(pending),
                "outputs": report_outputs(report)}
        self._fh.write(json.dumps(line, sort_keys=True) + "\n")

    def close(self) -> None:
        self._fh.close()


def read_recording(path: str | Path) -> tuple[RuntimeConfig, Iterator[dict]]:
    fh = open(path)
    header = json.loads(fh.readline())
    if header.get("schema_version") != RECORD_SCHEMA_VERSION or header.get("kind") != "cage-record":
        fh.close()
        raise ValueError("unrecognized recording schema/version")
    cfg = runtime_config_from_dict(header["config"])

    def lines():
        with fh:
            for raw in fh:
                if raw.strip():
                    yield json.loads(raw)

    return cfg, lines()


def replay(path: str | Path) -> dict:
    """Re-run a recording; report the first divergent tick, if any."""
    cfg, ticks = read_recording(path)
    runtime = CageRuntime(cfg)
    checked = 0
    for line in ticks:
        sensors = _sensors_from_dict(line["sensors"])
        pending = _fragments_from_list(line["commands"])
        report = runtime.tick(sensors, pending)
        got = report_outputs(report)
        want = line["outputs"]
        if got != want:
            return {"ok": False, "ticks_checked": checked,
                    "first_divergence": {"tick": want.get("tick", checked),
                                         "recorded": want, "recomputed": got}}
        checked += 1
    return {"ok": True, "ticks_checked": checked}
