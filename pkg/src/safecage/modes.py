"""Mode-control state machine.

Computes the fail-operational reaction (cage mode + driving mode) from
the monitor verdicts and safety-driver requests.  The machine is a pure,
total function of (state, input): malformed or unauthorized requests are
ignored, never faulted, and an emergency stop can only be released by an
authorized driver request while no violation is present.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .camera import Validity
from .lidar import Occupancy


class DrivingMode(Enum):
    FULLY_AUTONOMOUS = "Fully Autonomous Driving"
    LIMITED_AUTONOMOUS = "Limited Autonomous Driving"
    REMOTE_MANUAL = "Remote Manual Driving"
    IN_PLACE_MANUAL = "In-Place Manual Driving"
    EMERGENCY_STOP = "Emergency Stop"


class CageMode(Enum):
    ON = "On"
    OFF = "Off"


class MissionState(Enum):
    INACTIVE = "Inactive"
    ACTIVE = "Active"
    BLOCKED = "Blocked"
    COMPLETED = "Completed"


@dataclass(frozen=True)
class ModeInput:
    occupancy: Occupancy = Occupancy.SAFE_ZONE_FREE
    camera_valid: Validity = Validity.VALID
    cage_request: CageMode | None = None
    mode_request: DrivingMode | None = None
    requester_has_control: bool = False
    at_destination: bool = False
    destination_active: bool = False


@dataclass(frozen=True)
class ModeState:
    cage: CageMode = CageMode.ON
    driving: DrivingMode = DrivingMode.EMERGENCY_STOP
    mission: MissionState = MissionState.INACTIVE


def _violation(cage: CageMode, inp: ModeInput) -> bool:
    return cage is CageMode.ON and (
        inp.occupancy is Occupancy.CLEAR_ZONE_OCCUPIED
        or inp.camera_valid is Validity.INVALID)


def step(current: ModeState, inp: ModeInput) -> ModeState:
    """Advance the machine one tick.

    Rule priority: violation latch, emergency-stop release, driving-mode
    request, cage request, mission bookkeeping.  The violation check uses
    the cage mode held at the start of the tick, so a cage-off request
    arriving together with a violation cannot suppress the latch.
    """
    cage = current.cage
    driving = current.driving
    violation = _violation(cage, inp)

    # 1. violation latch (an in-vehicle driver is never overridden)
    if violation and driving is not DrivingMode.IN_PLACE_MANUAL:
        driving = DrivingMode.EMERGENCY_STOP

    # 2/3. driving-mode requests, gated on control rights
    req = inp.mode_request
    if req is not None and inp.requester_has_control:
        if driving is DrivingMode.EMERGENCY_STOP:
            # only exit from the latch: explicit request, no violation
            if req is not DrivingMode.EMERGENCY_STOP and not violation:
                driving = req
        elif req in (DrivingMode.LIMITED_AUTONOMOUS, DrivingMode.EMERGENCY_STOP):
            driving = req
        elif not violation:
            driving = req

    # 4. cage request
    if inp.cage_request is not None and inp.requester_has_control:
        cage = inp.cage_request

    # 5. mission bookkeeping
    mission = current.mission
    if mission is MissionState.INACTIVE and inp.destination_active:
        mission = MissionState.ACTIVE
    elif mission is MissionState.ACTIVE and inp.at_destination:
        mission = MissionState.COMPLETED
    elif mission is MissionState.ACTIVE and driving is DrivingMode.EMERGENCY_STOP:
        mission = MissionState.BLOCKED
    elif (mission is MissionState.BLOCKED
          and driving is not DrivingMode.EMERGENCY_STOP
          and inp.destination_active):
        mission = MissionState.ACTIVE
    if driving is DrivingMode.EMERGENCY_STOP and mission is MissionState.ACTIVE:
        mission = MissionState.BLOCKED

    return ModeState(cage=cage, driving=driving, mission=mission)
