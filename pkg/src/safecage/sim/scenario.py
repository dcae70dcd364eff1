"""Scripted scenarios and the deterministic simulation loop.

A scenario is a YAML script (schema_version 1) naming a map, a route,
a speed setpoint, timed or triggered events, and the checks a run must
satisfy.  The loop advances vehicle physics at a fixed 10 ms step and
runs one cage tick every 5 steps, all on a shared clock with a seeded
noise generator, so identical (script, seed) pairs produce identical
event logs.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..camera import CameraId
from ..geometry import SafeZoneConfig, VehicleState
from ..lidar import DetectorConfig, Occupancy
from ..modes import CageMode, DrivingMode, MissionState
from ..recording import Recorder
from ..runtime import (ActuatorKind, CageRuntime, CageTickReport, CommandFragment,
                       RuntimeConfig, SensorBundle)
from .sensors import LidarConfig, NoiseConfig, make_camera_frame, sample_lidar
from .vehicle import SimVehicle, step_physics
from .world import WorldMap, load_map, point_to_polygon_distance, validate_polygon

SCENARIO_SCHEMA_VERSION = 1

PHYSICS_DT = 0.01            # s
STEPS_PER_TICK = 5           # cage tick every 50 ms


@dataclass
class ScenarioEvent:
    action: str
    params: dict
    at_time: float | None = None
    on_mode: str | None = None
    x_beyond: float | None = None
    delay: float = 0.0
    fired: bool = False
    armed_at: float | None = None


@dataclass
class Scenario:
    id: str
    name: str
    map_path: Path
    route: str | None = None
    laps: int = 1
    target_speed: float = 2.5
    duration: float = 60.0
    start: dict = field(default_factory=dict)
    noise: NoiseConfig = field(default_factory=NoiseConfig.default)
    lidar: LidarConfig = field(default_factory=LidarConfig)
    events: list[ScenarioEvent] = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    runtime_overrides: dict = field(default_factory=dict)
    stop_after_standstill: bool = False


def builtin_path(kind: str, name: str) -> Path:
    base = resources.files("safecage").joinpath("data", kind)
    return Path(str(base.joinpath(name)))


def _parse_noise(spec) -> NoiseConfig:
    if spec in (None, "default"):
        return NoiseConfig.default()
    if spec == "off":
        return NoiseConfig.off()
    if spec == "ghost":
        return NoiseConfig(range_sigma=0.01, ghost_low_rate=40.0, ghost_high_rate=2.0)
    if isinstance(spec, dict):
        return NoiseConfig(**spec)
    raise ValueError(f"unknown noise spec: {spec!r}")


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    data = yaml.safe_load(path.read_text())
    if data.get("schema_version") != SCENARIO_SCHEMA_VERSION:
        raise ValueError(f"unsupported scenario schema_version: {data.get('schema_version')!r}")
    map_ref = data["map"]
    map_path = Path(map_ref)
    if not map_path.suffix:
        map_path = builtin_path("maps", f"{map_ref}.yaml")
    elif not map_path.is_absolute():
        map_path = path.parent / map_path

    events = []
    for ev in data.get("events") or []:
        trigger = ev.get("trigger") or {}
        events.append(ScenarioEvent(
            action=ev["action"], params=ev.get("params") or {},
            at_time=trigger.get("time"), on_mode=trigger.get("mode"),
            x_beyond=trigger.get("x_beyond"), delay=trigger.get("delay", 0.0)))

    lidar_spec = data.get("lidar") or {}
    if "z_layers" in lidar_spec:
        lidar_spec["z_layers"] = tuple(lidar_spec["z_layers"])
    return Scenario(
        id=str(data.get("id", path.stem)),
        name=data.get("name", path.stem),
        map_path=map_path,
        route=data.get("route"),
        laps=int(data.get("laps", 1)),
        target_speed=float(data.get("target_speed", 2.5)),
        duration=float(data.get("duration", 60.0)),
        start=data.get("start") or {},
        noise=_parse_noise(data.get("noise")),
        lidar=LidarConfig(**lidar_spec),
        events=events,
        checks=data.get("checks") or {},
        runtime_overrides=data.get("runtime") or {},
        stop_after_standstill=bool(data.get("stop_after_standstill", False)),
    )


def resolve_scenario(ref: str) -> Path:
    """Accept a built-in scenario id or a filesystem path."""
    p = Path(ref)
    if p.exists():
        return p
    candidate = builtin_path("scenarios", f"{ref}.yaml")
    if candidate.exists():
        return candidate
    raise FileNotFoundError(f"scenario not found: {ref}")


class RouteFollower:
    """Pure-pursuit follower over a waypoint polyline, with lap support."""

    def __init__(self, route: list[tuple[float, float]], laps: int = 1,
                 lookahead: float = 2.5, capture: float = 1.2):
        self.route = route
        self.laps = laps
        self.lookahead = lookahead
        self.capture = capture
        self.idx = 0
        self.lap = 0
        self.done = len(route) == 0

    def _advance(self, x: float, y: float) -> None:
        while not self.done:
            wx, wy = self.route[self.idx]
            if math.hypot(wx - x, wy - y) > self.capture:
                return
            self.idx += 1
            if self.idx >= len(self.route):
                self.lap += 1
                if self.lap >= self.laps:
                    self.done = True
                else:
                    self.idx = 0

    def target(self, x: float, y: float) -> tuple[float, float] | None:
        self._advance(x, y)
        if self.done:
            return None
        for j in range(self.idx, len(self.route)):
            wx, wy = self.route[j]
            if math.hypot(wx - x, wy - y) >= self.lookahead:
                return (wx, wy)
        return self.route[-1]

    def steer_toward(self, v: SimVehicle) -> float:
        tgt = self.target(v.x, v.y)
        if tgt is None:
            return 0.0
        dx, dy = tgt[0] - v.x, tgt[1] - v.y
        alpha = math.atan2(dy, dx) - v.heading
        alpha = (alpha + math.pi) % (2 * math.pi) - math.pi
        ld = max(self.lookahead, math.hypot(dx, dy))
        curvature = 2.0 * math.sin(alpha) / ld
        return max(-v.max_steering, min(v.max_steering,
                                        math.atan(v.wheelbase * curvature)))


def _apply_runtime_overrides(base: RuntimeConfig, overrides: dict) -> RuntimeConfig:
    if not overrides:
        return base
    zone = dataclasses.replace(base.zone, **overrides.get("zone", {}))
    detector = dataclasses.replace(base.detector, **overrides.get("detector", {}))
    top = {k: v for k, v in overrides.items() if k not in ("zone", "detector")}
    return dataclasses.replace(base, zone=zone, detector=detector, **top)


class SimRunner:
    """Owns the world, vehicle, cage runtime, and script state for a run."""

    def __init__(self, scenario: Scenario, seed: int = 0,
                 runtime_cfg: RuntimeConfig | None = None,
                 record_path: str | Path | None = None,
                 world: WorldMap | None = None):
        self.scenario = scenario
        self.world = world or load_map(scenario.map_path)
        self.cfg = _apply_runtime_overrides(runtime_cfg or RuntimeConfig(),
                                            scenario.runtime_overrides)
        self.rng = np.random.default_rng(seed)
        self.runtime = CageRuntime(self.cfg)
        self.t = 0.0
        self.events: list[dict] = []
        self.dynamic_obstacles: dict[str, np.ndarray] = {}
        self.blocked_cameras: set[CameraId] = set()
        self.pending: list[CommandFragment] = []
        self.active_destination: str | None = None
        self.reached_destinations: set[str] = set()
        self.teleop: tuple[float, float] | None = None  # (steer, accel)
        self.link_ok = True
        self.speed_cap: float | None = None
        self.emergency_stop_count = 0
        self._standstill_logged = False
        self._last_report: CageTickReport | None = None
        self._mode_entered: str | None = None
        self._last_sensors: SensorBundle | None = None
        self._next_position_log = 0.0
        self._recorder = Recorder(record_path, self.cfg) if record_path else None

        start = scenario.start
        self.vehicle = SimVehicle(
            x=float(start.get("x", 0.0)), y=float(start.get("y", 0.0)),
            heading=float(start.get("heading", 0.0)),
            max_speed=float(start.get("max_speed", 6.0)),
            max_decel=self.cfg.zone.max_decel,
            wheelbase=self.cfg.zone.wheelbase,
            length=self.cfg.zone.vehicle_length,
            width=self.cfg.zone.vehicle_width)
        route = self.world.routes.get(scenario.route or "", [])
        self.follower = RouteFollower(route, laps=scenario.laps)
        self._lap_logged = 0

        for ev in scenario.events:
            self._validate_event(ev)

    # -- script handling -----------------------------------------------

    def _validate_event(self, ev: ScenarioEvent) -> None:
        if ev.action == "remove_obstacle":
            return  # may refer to an obstacle spawned later
        if ev.action == "activate_destination":
            self.world.destination(str(ev.params["id"]))  # fail fast
        if ev.action == "spawn_obstacle":
            validate_polygon(ev.params.get("name", "?"), ev.params["polygon"])
        if ev.action in ("block_camera", "unblock_camera"):
            CameraId(ev.params.get("camera", "Front"))

    def _event_due(self, ev: ScenarioEvent) -> bool:
        if ev.fired:
            return False
        if ev.at_time is not None:
            return self.t >= ev.at_time
        trigger = False
        if ev.on_mode is not None:
            # Arm on a transition into the mode, not on the initial state.
            trigger = self._mode_entered == ev.on_mode
        elif ev.x_beyond is not None:
            trigger = self.vehicle.x > ev.x_beyond
        if trigger and ev.armed_at is None:
            ev.armed_at = self.t
        return ev.armed_at is not None and self.t >= ev.armed_at + ev.delay

    def _apply_event(self, ev: ScenarioEvent) -> None:
        ev.fired = True
        p = ev.params
        if ev.action == "spawn_obstacle":
            self.dynamic_obstacles[p["name"]] = validate_polygon(p["name"], p["polygon"])
        elif ev.action == "remove_obstacle":
            self.dynamic_obstacles.pop(p["name"], None)
        elif ev.action == "block_camera":
            self.blocked_cameras.add(CameraId(p.get("camera", "Front")))
        elif ev.action == "unblock_camera":
            self.blocked_cameras.discard(CameraId(p.get("camera", "Front")))
        elif ev.action == "request":
            self.pending.append(CommandFragment(
                cage_request=CageMode(p["cage"]) if "cage" in p else None,
                mode_request=DrivingMode(p["mode"]) if "mode" in p else None,
                requester_has_control=bool(p.get("has_control", True))))
        elif ev.action == "activate_destination":
            self.activate_destination(str(p["id"]))
        elif ev.action == "set_link":
            self.link_ok = bool(p.get("ok", True))
        else:
            raise ValueError(f"unknown scenario action: {ev.action}")
        self._log("event", action=ev.action, **{k: v for k, v in p.items()
                                                if k != "polygon"})

    def activate_destination(self, dest_id: str) -> None:
        self.world.destination(dest_id)  # fail fast on unknown ids
        self.active_destination = dest_id
        self.reached_destinations.discard(dest_id)
        # a fresh mission after completion starts from Inactive
        if self.runtime.state.mission is MissionState.COMPLETED:
            self.runtime.state = dataclasses.replace(self.runtime.state,
                                                     mission=MissionState.INACTIVE)

    # -- logging ---------------------------------------------------------

    def _log(self, type_: str, **fields) -> None:
        rec = {"t": round(self.t, 3), "type": type_}
        rec.update(fields)
        self.events.append(rec)

    # -- sensing ---------------------------------------------------------

    def _obstacle_polys(self) -> list[np.ndarray]:
        return list(self.world.obstacles.values()) + list(self.dynamic_obstacles.values())

    def _sense(self) -> SensorBundle:
        ts = int(round(self.t * 1e9))
        cloud = sample_lidar(self._obstacle_polys(), self.vehicle,
                             self.scenario.lidar, self.scenario.noise,
                             self.rng, timestamp_ns=ts)
        cameras = {cam: make_camera_frame(cam, self.runtime.tick_index,
                                          blocked=cam in self.blocked_cameras,
                                          timestamp_ns=ts)
                   for cam in CameraId}
        at_dest = False
        if self.active_destination is not None:
            d = self.world.destination(self.active_destination)
            at_dest = math.hypot(d.x - self.vehicle.x, d.y - self.vehicle.y) <= 1.0
        return SensorBundle(vehicle=self.vehicle.state(), cloud=cloud,
                            cameras=cameras, timestamp_ns=ts,
                            at_destination=at_dest,
                            destination_active=self.active_destination is not None,
                            link_ok=self.link_ok)

    # -- control ----------------------------------------------------------

    def _control(self) -> None:
        v = self.vehicle
        mode = self.runtime.state.driving
        mission = self.runtime.state.mission
        v.emergency = (self._last_report is not None
                       and self._last_report.actuator.kind is ActuatorKind.BRAKE)
        if v.emergency:
            return
        autonomous = mode in (DrivingMode.FULLY_AUTONOMOUS, DrivingMode.LIMITED_AUTONOMOUS)
        mission_ok = (self.active_destination is None
                      or mission is MissionState.ACTIVE)
        if autonomous and mission_ok and not self.follower.done:
            setpoint = self.scenario.target_speed
            if self.speed_cap is not None:
                setpoint = min(setpoint, self.speed_cap)
            v.commanded_steer = self.follower.steer_toward(v)
            v.commanded_accel = max(-2.0, min(2.0, (setpoint - v.speed) / 0.5))
        elif mode is DrivingMode.REMOTE_MANUAL and self.teleop is not None:
            v.commanded_steer, v.commanded_accel = self.teleop
        else:
            v.commanded_steer = 0.0
            v.commanded_accel = -2.0

    # -- main loop ----------------------------------------------------------

    def step_tick(self) -> CageTickReport:
        """Advance one cage tick (5 physics steps) and return its report."""
        sensors = self._sense()
        pending, self.pending = self.pending, []
        prev_state = self.runtime.state
        prev_report = self._last_report
        report = self.runtime.tick(sensors, pending)
        if self._recorder:
            self._recorder.write_tick(sensors, pending, report)
        self._last_sensors = sensors
        self._last_report = report
        self.speed_cap = (report.actuator.value
                          if report.actuator.kind is ActuatorKind.VELOCITY_CAP else None)

        if prev_report is None or report.occupancy is not prev_report.occupancy:
            self._log("occupancy_change", value=report.occupancy.value)
        if prev_report is None or report.sensor_validity is not prev_report.sensor_validity:
            self._log("sensor_validity_change", value=report.sensor_validity.value)

        state = self.runtime.state
        self._mode_entered = (state.driving.value
                              if state.driving is not prev_state.driving else None)
        if state != prev_state:
            self._log("mode_change", driving=state.driving.value,
                      cage=state.cage.value, mission=state.mission.value)
            if (state.driving is DrivingMode.EMERGENCY_STOP
                    and prev_state.driving is not DrivingMode.EMERGENCY_STOP):
                self.emergency_stop_count += 1
                self._standstill_logged = False
        if (self._last_sensors.at_destination and self.active_destination
                and state.mission is MissionState.COMPLETED
                and self.active_destination not in self.reached_destinations):
            self.reached_destinations.add(self.active_destination)
            self._log("destination_reached", id=self.active_destination)

        for ev in self.scenario.events:
            if self._event_due(ev):
                self._apply_event(ev)

        for _ in range(STEPS_PER_TICK):
            self._control()
            step_physics(self.vehicle, PHYSICS_DT)
            self.t += PHYSICS_DT

        if (self.vehicle.emergency and self.vehicle.speed == 0.0
                and self.emergency_stop_count > 0
                and not self._standstill_logged):
            self._standstill_logged = True
            self._log("standstill", gap=round(self._gap_to_obstacles(), 3))
        if self.follower.lap > self._lap_logged:
            self._lap_logged = self.follower.lap
            self._log("lap", n=self._lap_logged)
        if self.t >= self._next_position_log:
            self._next_position_log += 1.0
            self._log("position", x=round(self.vehicle.x, 3),
                      y=round(self.vehicle.y, 3),
                      heading=round(self.vehicle.heading, 4),
                      speed=round(self.vehicle.speed, 3))
        return report

    def _gap_to_obstacles(self) -> float:
        bx, by = self.vehicle.front_bumper()
        polys = self._obstacle_polys()
        if not polys:
            return math.inf
        return min(point_to_polygon_distance(bx, by, p) for p in polys)

    def run(self, duration: float | None = None) -> list[dict]:
        duration = duration if duration is not None else self.scenario.duration
        self._log("start", scenario=self.scenario.id)
        stop_at = math.inf
        while self.t < min(duration, stop_at):
            self.step_tick()
            if (self.scenario.stop_after_standstill and self._standstill_logged
                    and stop_at is math.inf):
                stop_at = self.t + 1.0
        self._log("end", ticks=self.runtime.tick_index,
                  emergency_stops=self.emergency_stop_count,
                  mission=self.runtime.state.mission.value,
                  laps=self.follower.lap)
        if self._recorder:
            self._recorder.close()
        return self.events


def run_scenario(scenario: Scenario, seed: int = 0, duration: float | None = None,
                 record_path: str | Path | None = None,
                 runtime_cfg: RuntimeConfig | None = None) -> list[dict]:
    return SimRunner(scenario, seed=seed, runtime_cfg=runtime_cfg,
                     record_path=record_path).run(duration)
