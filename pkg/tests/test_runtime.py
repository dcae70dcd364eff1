"""Cage runtime: fail-safe defaults, actuator mapping, determinism."""

import numpy as np
import pytest

from safecage.camera import CameraId, Validity
from safecage.geometry import VehicleState
from safecage.lidar import Occupancy, PointCloud
from safecage.modes import CageMode, DrivingMode, MissionState, ModeState
from safecage.recording import report_outputs
from safecage.runtime import (ActuatorKind, CageRuntime, CommandFragment,
                              RuntimeConfig, SensorBundle, merge_fragments,
                              state_update_payload)
from safecage.sim.sensors import make_camera_frame

CFG = RuntimeConfig()
TICK_NS = CFG.tick_period_ns


def sensors_at(tick=0, cloud_points=(), cloud=..., cameras=None, link_ok=True,
               speed=2.0, at_destination=False, destination_active=False):
    now = tick * TICK_NS
    if cloud is ...:
        pts = np.asarray(list(cloud_points), dtype=float).reshape(-1, 3)
        cloud = PointCloud(pts, timestamp_ns=now)
    if cameras is None:
        cameras = {cam: make_camera_frame(cam, tick, timestamp_ns=now)
                   for cam in CameraId}
    return SensorBundle(vehicle=VehicleState(speed=speed, steering_angle=0.0),
                        cloud=cloud, cameras=cameras, timestamp_ns=now,
                        at_destination=at_destination,
                        destination_active=destination_active, link_ok=link_ok)


def running_runtime(driving=DrivingMode.FULLY_AUTONOMOUS):
    return CageRuntime(CFG, initial=ModeState(driving=driving))


def wall_points(x=2.0, n=5):
    return [[x, (i - n // 2) * 0.05, 0.5] for i in range(n)]


# -- fail-safe defaults --------------------------------------------------------

def test_missing_cloud_is_a_violation_same_tick():
    rt = running_runtime()
    report = rt.tick(sensors_at(cloud=None))
    assert report.occupancy is Occupancy.CLEAR_ZONE_OCCUPIED
    assert report.mode_state.driving is DrivingMode.EMERGENCY_STOP
    assert report.actuator.kind is ActuatorKind.BRAKE


def test_stale_cloud_is_a_violation():
    rt = running_runtime()
    now = 10 * TICK_NS
    stale = PointCloud(np.zeros((0, 3)),
                       timestamp_ns=now - (CFG.stale_after_ticks + 1) * TICK_NS)
    bundle = sensors_at(tick=10, cloud=stale)
    report = rt.tick(bundle)
    assert report.occupancy is Occupancy.CLEAR_ZONE_OCCUPIED


def test_cloud_within_staleness_budget_is_accepted():
    rt = running_runtime()
    now = 10 * TICK_NS
    fresh_enough = PointCloud(np.zeros((0, 3)),
                              timestamp_ns=now - CFG.stale_after_ticks * TICK_NS)
    report = rt.tick(sensors_at(tick=10, cloud=fresh_enough))
    assert report.occupancy is Occupancy.SAFE_ZONE_FREE


def test_missing_camera_invalidates_sensors():
    rt = running_runtime()
    cams = {cam: make_camera_frame(cam, 0) for cam in CameraId
            if cam is not CameraId.BACK}
    report = rt.tick(sensors_at(cameras=cams))
    assert report.camera_valid[CameraId.BACK] is Validity.INVALID
    assert report.sensor_validity is Validity.INVALID
    assert report.mode_state.driving is DrivingMode.EMERGENCY_STOP


def test_blocked_camera_stops_within_one_tick_and_stays_stopped():
    rt = running_runtime()
    good = sensors_at()
    assert rt.tick(good).mode_state.driving is DrivingMode.FULLY_AUTONOMOUS

    cams = {cam: make_camera_frame(cam, 1, blocked=(cam is CameraId.FRONT),
                                   timestamp_ns=TICK_NS) for cam in CameraId}
    report = rt.tick(sensors_at(tick=1, cameras=cams))
    assert report.sensor_validity is Validity.INVALID
    assert report.mode_state.driving is DrivingMode.EMERGENCY_STOP

    # the camera recovering does not resume driving on its own
    report = rt.tick(sensors_at(tick=2))
    assert report.sensor_validity is Validity.VALID
    assert report.mode_state.driving is DrivingMode.EMERGENCY_STOP

    # an authorized request does
    frag = CommandFragment(mode_request=DrivingMode.FULLY_AUTONOMOUS,
                           requester_has_control=True)
    report = rt.tick(sensors_at(tick=3), [frag])
    assert report.mode_state.driving is DrivingMode.FULLY_AUTONOMOUS


# -- actuator mapping ------------------------------------------------------------

def test_brake_command_iff_emergency_stop():
    rt = running_runtime()
    report = rt.tick(sensors_at(cloud_points=wall_points()))
    assert report.occupancy is Occupancy.CLEAR_ZONE_OCCUPIED
    assert report.actuator.kind is ActuatorKind.BRAKE
    assert report.actuator.value == CFG.zone.max_decel


def test_limited_mode_caps_velocity_and_shrinks_zone():
    rt_full = running_runtime(DrivingMode.FULLY_AUTONOMOUS)
    rt_lim = running_runtime(DrivingMode.LIMITED_AUTONOMOUS)
    full = rt_full.tick(sensors_at(speed=3.0))
    lim = rt_lim.tick(sensors_at(speed=3.0))
    assert lim.actuator.kind is ActuatorKind.VELOCITY_CAP
    assert lim.actuator.value == CFG.limited_speed_cap
    assert lim.zone["lookahead_m"] < full.zone["lookahead_m"]
    assert full.actuator.kind is ActuatorKind.PROCEED


def test_remote_manual_link_loss_latches_stop():
    rt = running_runtime(DrivingMode.REMOTE_MANUAL)
    report = rt.tick(sensors_at(link_ok=False, destination_active=True))
    assert report.mode_state.driving is DrivingMode.EMERGENCY_STOP
    assert report.mode_state.mission is not MissionState.ACTIVE
    # link recovery alone does not resume
    report = rt.tick(sensors_at(tick=1))
    assert report.mode_state.driving is DrivingMode.EMERGENCY_STOP


def test_link_loss_is_ignored_outside_remote_manual():
    rt = running_runtime(DrivingMode.FULLY_AUTONOMOUS)
    report = rt.tick(sensors_at(link_ok=False))
    assert report.mode_state.driving is DrivingMode.FULLY_AUTONOMOUS


# -- command fragments -------------------------------------------------------------

def test_merge_fragments_latest_field_wins():
    frags = [
        CommandFragment(mode_request=DrivingMode.LIMITED_AUTONOMOUS,
                        requester_has_control=True),
        CommandFragment(cage_request=CageMode.OFF, requester_has_control=True),
        CommandFragment(mode_request=DrivingMode.REMOTE_MANUAL,
                        requester_has_control=True),
    ]
    merged = merge_fragments(frags)
    assert merged.mode_request is DrivingMode.REMOTE_MANUAL
    assert merged.cage_request is CageMode.OFF
    assert merged.requester_has_control


def test_merge_of_nothing_is_inert():
    merged = merge_fragments([])
    assert merged.mode_request is None and merged.cage_request is None
    assert not merged.requester_has_control


# -- determinism and telemetry ------------------------------------------------------

def test_tick_outputs_are_deterministic():
    def run():
        rt = running_runtime()
        outs = []
        for tick in range(5):
            pts = wall_points(x=6.0 - tick) if tick >= 3 else ()
            outs.append(report_outputs(rt.tick(sensors_at(tick=tick,
                                                          cloud_points=pts))))
        return outs

    assert run() == run()


def test_state_update_payload_vocabulary():
    rt = running_runtime()
    bundle = sensors_at()
    payload = state_update_payload(rt.tick(bundle), bundle)
    assert payload["Sensor Validity"] in ("Valid", "Invalid")
    assert payload["Mission State"] in ("Inactive", "Active", "Blocked", "Completed")
    assert payload["Driving Mode"] in (
        "Fully Autonomous Driving", "Limited Autonomous Driving",
        "Remote Manual Driving", "In-Place Manual Driving", "Emergency Stop")
    assert payload["Cage State"] in (
        "Safe Zone Free", "Focus Zone Occupied", "Clear Zone Occupied")
    assert set(payload["cameras"]) == {"Front", "Back", "Left", "Right"}
    assert payload["zone"]["shape"] in ("Rectangle", "CircleSegment")


def test_payload_subsamples_large_clouds():
    rt = running_runtime()
    pts = np.random.default_rng(0).uniform(-20, 20, size=(20_000, 3))
    pts[:, 2] = 5.0  # far above the band so the verdict stays free
    bundle = sensors_at(cloud=PointCloud(pts))
    payload = state_update_payload(rt.tick(bundle), bundle, max_lidar_points=1500)
    assert len(payload["lidar"]) <= 1600
