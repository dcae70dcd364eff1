"""Onboard cage runtime: the per-tick monitor pipeline.

Each tick runs zone computation, LiDAR detection, camera validation, and
the mode-control step, then derives the actuator command.  Absent or
stale safety inputs map to the most conservative outcome (missing LiDAR
counts as a clear-zone hit, a missing camera as invalid).
"""

from __future__ import annotations

import base64
import time
from dataclasses import dataclass, field
from enum import Enum

from .camera import CameraFrame, CameraId, ValidatorConfig, Validity, combine_validity, validate
from .geometry import SafeZoneConfig, VehicleState, compute_zone, zone_payload
from .lidar import Cluster, DetectorConfig, Occupancy, PointCloud, cluster, filter_ground, assess
from .modes import CageMode, DrivingMode, MissionState, ModeInput, ModeState, step


class ActuatorKind(Enum):
    PROCEED = "Proceed"
    BRAKE = "Brake"
    VELOCITY_CAP = "VelocityCap"


@dataclass(frozen=True)
class ActuatorCommand:
    kind: ActuatorKind
    value: float = 0.0  # decel for Brake, speed limit for VelocityCap


@dataclass(frozen=True)
class RuntimeConfig:
    zone: SafeZoneConfig = field(default_factory=SafeZoneConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    validator: ValidatorConfig = field(default_factory=ValidatorConfig)
    tick_rate_hz: float = 20.0
    link_timeout_s: float = 2.0
    limited_speed_cap: float = 1.5   # m/s in limited autonomy
    stale_after_ticks: int = 2

    @property
    def tick_period_ns(self) -> int:
        return int(1e9 / self.tick_rate_hz)


@dataclass(frozen=True)
class SensorBundle:
    vehicle: VehicleState
    cloud: PointCloud | None
    cameras: dict[CameraId, CameraFrame]
    timestamp_ns: int = 0
    at_destination: bool = False
    destination_active: bool = False
    link_ok: bool = True


@dataclass(frozen=True)
class CageTickReport:
    tick_index: int
    occupancy: Occupancy
    camera_valid: dict[CameraId, Validity]
    sensor_validity: Validity
    mode_state: ModeState
    zone: dict
    actuator: ActuatorCommand
    offending_cluster: Cluster | None = None
    latency_us: int = 0


@dataclass(frozen=True)
class CommandFragment:
    """One pending request from the supervision side, applied next tick."""

    cage_request: CageMode | None = None
    mode_request: DrivingMode | None = None
    requester_has_control: bool = False


def merge_fragments(fragments: list[CommandFragment]) -> CommandFragment:
    """Collapse pending requests; the latest of each field wins."""
    cage = mode = None
    control = False
    for frag in fragments:
        if frag.cage_request is not None:
            cage = frag.cage_request
            control = frag.requester_has_control
        if frag.mode_request is not None:
            mode = frag.mode_request
            control = frag.requester_has_control
    return CommandFragment(cage_request=cage, mode_request=mode,
                           requester_has_control=control)


class CageRuntime:
    """Single-writer orchestrator; call tick() once per cage period."""

    def __init__(self, cfg: RuntimeConfig | None = None,
                 initial: ModeState | None = None):
        self.cfg = cfg or RuntimeConfig()
        self.state = initial or ModeState(cage=CageMode.ON,
                                          driving=DrivingMode.EMERGENCY_STOP,
                                          mission=MissionState.INACTIVE)
        self.tick_index = 0

    def _mode_scale(self) -> float:
        if self.state.driving is DrivingMode.LIMITED_AUTONOMOUS:
            return self.cfg.zone.limited_zone_scale
        return 1.0

    def _is_stale(self, frame_ts: int, now_ns: int) -> bool:
        return now_ns - frame_ts > self.cfg.stale_after_ticks * self.cfg.tick_period_ns

    def tick(self, sensors: SensorBundle,
             pending: list[CommandFragment] | None = None) -> CageTickReport:
        start = time.perf_counter_ns()
        now = sensors.timestamp_ns
        zone = compute_zone(sensors.vehicle, self.cfg.zone, self._mode_scale())

        offending: Cluster | None = None
        if sensors.cloud is None or self._is_stale(sensors.cloud.timestamp_ns, now):
            occupancy = Occupancy.CLEAR_ZONE_OCCUPIED  # fail-safe
        else:
            result = assess(cluster(filter_ground(sensors.cloud, self.cfg.detector),
                                    self.cfg.detector), zone)
            occupancy = result.value
            offending = result.offending_cluster

        camera_valid: dict[CameraId, Validity] = {}
        for cam in CameraId:
            frame = sensors.cameras.get(cam)
            if frame is None or self._is_stale(frame.timestamp_ns, now):
                camera_valid[cam] = Validity.INVALID
            else:
                camera_valid[cam] = validate(frame, self.cfg.validator)
        sensor_validity = combine_validity(camera_valid, self.cfg.validator)

        frag = merge_fragments(pending or [])
        self.state = step(self.state, ModeInput(
            occupancy=occupancy,
            camera_valid=sensor_validity,
            cage_request=frag.cage_request,
            mode_request=frag.mode_request,
            requester_has_control=frag.requester_has_control,
            at_destination=sensors.at_destination,
            destination_active=sensors.destination_active,
        ))

        # link loss while under remote manual control latches the stop
        if self.state.driving is DrivingMode.REMOTE_MANUAL and not sensors.link_ok:
            mission = self.state.mission
            if mission is MissionState.ACTIVE:
                mission = MissionState.BLOCKED
            self.state = ModeState(cage=self.state.cage,
                                   driving=DrivingMode.EMERGENCY_STOP,
                                   mission=mission)

        if self.state.driving is DrivingMode.EMERGENCY_STOP:
            actuator = ActuatorCommand(ActuatorKind.BRAKE, self.cfg.zone.max_decel)
        elif self.state.driving is DrivingMode.LIMITED_AUTONOMOUS:
            actuator = ActuatorCommand(ActuatorKind.VELOCITY_CAP,
                                       self.cfg.limited_speed_cap)
        else:
            actuator = ActuatorCommand(ActuatorKind.PROCEED)

        report = CageTickReport(
            tick_index=self.tick_index,
            occupancy=occupancy,
            camera_valid=camera_valid,
            sensor_validity=sensor_validity,
            mode_state=self.state,
            zone=zone_payload(zone),
            actuator=actuator,
            offending_cluster=offending,
            latency_us=(time.perf_counter_ns() - start) // 1000,
        )
        self.tick_index += 1
        return report


def state_update_payload(report: CageTickReport, sensors: SensorBundle,
                         max_lidar_points: int = 1500) -> dict:
    """Telemetry payload for StateUpdate messages; attribute names and
    value sets match the operator-facing vocabulary exactly."""
    cloud_pts: list[list[float]] = []
    if sensors.cloud is not None:
        pts = sensors.cloud.points
        stride = max(1, len(pts) // max_lidar_points)
        cloud_pts = [[round(float(x), 3), round(float(y), 3)]
                     for x, y, _ in pts[::stride]]
    thumbs = {}
    for cam, frame in sensors.cameras.items():
        thumbs[cam.value] = {
            "width": frame.width,
            "height": frame.height,
            "gray8_b64": base64.b64encode(frame.pixels.tobytes()).decode(),
        }
    return {
        "Sensor Validity": report.sensor_validity.value,
        "Mission State": report.mode_state.mission.value,
        "Driving Mode": report.mode_state.driving.value,
        "Cage State": report.occupancy.value,
        "cage_mode": report.mode_state.cage.value,
        "tick": report.tick_index,
        "pose": {
            "x": round(sensors.vehicle.x, 3),
            "y": round(sensors.vehicle.y, 3),
            "heading": round(sensors.vehicle.heading, 4),
            "speed": round(sensors.vehicle.speed, 3),
            "steering": round(sensors.vehicle.steering_angle, 4),
        },
        "zone": report.zone,
        "lidar": cloud_pts,
        "cameras": thumbs,
        "camera_validity": {c.value: v.value for c, v in report.camera_valid.items()},
        "actuator": {"kind": report.actuator.kind.value,
                     "value": round(report.actuator.value, 3)},
    }
