"""Mode machine: exhaustive latch table plus randomized sequence invariants."""

import itertools
import random

import pytest

from safecage.camera import Validity
from safecage.lidar import Occupancy
from safecage.modes import (CageMode, DrivingMode, MissionState, ModeInput,
                            ModeState, step)

AUTONOMOUS = (DrivingMode.FULLY_AUTONOMOUS, DrivingMode.LIMITED_AUTONOMOUS)


def mode_step_oracle(state: ModeState, inp: ModeInput) -> ModeState:
    """Plain decision-table restatement of the machine, kept separate on
    purpose so the implementation is checked against independent logic."""
    cage, driving, mission = state.cage, state.driving, state.mission
    violation = cage is CageMode.ON and (
        inp.occupancy is Occupancy.CLEAR_ZONE_OCCUPIED
        or inp.camera_valid is Validity.INVALID)

    if violation and driving is not DrivingMode.IN_PLACE_MANUAL:
        driving = DrivingMode.EMERGENCY_STOP

    if inp.mode_request is not None and inp.requester_has_control:
        req = inp.mode_request
        if driving is DrivingMode.EMERGENCY_STOP:
            if not violation and req is not DrivingMode.EMERGENCY_STOP:
                driving = req
        else:
            always_allowed = req in (DrivingMode.EMERGENCY_STOP,
                                     DrivingMode.LIMITED_AUTONOMOUS)
            if always_allowed or not violation:
                driving = req

    if inp.cage_request is not None and inp.requester_has_control:
        cage = inp.cage_request

    if mission is MissionState.INACTIVE and inp.destination_active:
        mission = MissionState.ACTIVE
    elif mission is MissionState.ACTIVE and inp.at_destination:
        mission = MissionState.COMPLETED
    elif (mission is MissionState.BLOCKED
          and driving is not DrivingMode.EMERGENCY_STOP
          and inp.destination_active):
        mission = MissionState.ACTIVE
    if mission is MissionState.ACTIVE and driving is DrivingMode.EMERGENCY_STOP:
        mission = MissionState.BLOCKED
    return ModeState(cage=cage, driving=driving, mission=mission)


def random_input(rnd: random.Random) -> ModeInput:
    return ModeInput(
        occupancy=rnd.choice(list(Occupancy)),
        camera_valid=rnd.choice(list(Validity)),
        cage_request=rnd.choice([None, CageMode.ON, CageMode.OFF]),
        mode_request=rnd.choice([None] + list(DrivingMode)),
        requester_has_control=rnd.random() < 0.5,
        at_destination=rnd.random() < 0.1,
        destination_active=rnd.random() < 0.5,
    )


# -- exhaustive single-step table ----------------------------------------------

def exhaustive_cases():
    """All 720 combos of driving x cage x occupancy x camera x request x
    control, with the mission axis held inactive."""
    return itertools.product(
        list(DrivingMode), list(CageMode), list(Occupancy), list(Validity),
        [None] + list(DrivingMode), [False, True])


def test_exhaustive_latch_table():
    cases = list(exhaustive_cases())
    assert len(cases) == 720
    for driving, cage, occupancy, validity, request, control in cases:
        state = ModeState(cage=cage, driving=driving)
        inp = ModeInput(occupancy=occupancy, camera_valid=validity,
                        mode_request=request, requester_has_control=control)
        result = step(state, inp)
        assert result == mode_step_oracle(state, inp), (state, inp)

        violation = cage is CageMode.ON and (
            occupancy is Occupancy.CLEAR_ZONE_OCCUPIED
            or validity is Validity.INVALID)
        # the latch: violations force the stop unless a driver is seated
        if violation and driving is not DrivingMode.IN_PLACE_MANUAL:
            if not (control and request is DrivingMode.IN_PLACE_MANUAL):
                assert result.driving is DrivingMode.EMERGENCY_STOP
        # no exit from the stop without an authorized request
        if driving is DrivingMode.EMERGENCY_STOP and (request is None or not control):
            assert result.driving is DrivingMode.EMERGENCY_STOP
        # no exit while the violation persists
        if driving is DrivingMode.EMERGENCY_STOP and violation:
            assert result.driving is DrivingMode.EMERGENCY_STOP
        # focus-zone traffic never changes the driving mode by itself
        if (occupancy is Occupancy.FOCUS_ZONE_OCCUPIED
                and validity is Validity.VALID and request is None):
            assert result.driving is driving


def test_in_place_manual_is_never_overridden():
    for occupancy in Occupancy:
        for validity in Validity:
            state = ModeState(driving=DrivingMode.IN_PLACE_MANUAL)
            out = step(state, ModeInput(occupancy=occupancy, camera_valid=validity))
            assert out.driving is DrivingMode.IN_PLACE_MANUAL


def test_unauthorized_requests_are_ignored():
    state = ModeState(driving=DrivingMode.FULLY_AUTONOMOUS)
    out = step(state, ModeInput(mode_request=DrivingMode.REMOTE_MANUAL,
                                cage_request=CageMode.OFF,
                                requester_has_control=False))
    assert out.driving is DrivingMode.FULLY_AUTONOMOUS
    assert out.cage is CageMode.ON


def test_limited_and_stop_remain_requestable_under_violation():
    # degrading is allowed even while the monitor reports a violation;
    # only from in-place manual is this observable, since everywhere else
    # the latch has already forced the stop within the same tick
    state = ModeState(driving=DrivingMode.IN_PLACE_MANUAL)
    for req in (DrivingMode.LIMITED_AUTONOMOUS, DrivingMode.EMERGENCY_STOP):
        inp = ModeInput(occupancy=Occupancy.CLEAR_ZONE_OCCUPIED,
                        mode_request=req, requester_has_control=True)
        assert step(state, inp).driving is req
    # upgrading to full autonomy under a violation is refused
    inp = ModeInput(occupancy=Occupancy.CLEAR_ZONE_OCCUPIED,
                    mode_request=DrivingMode.FULLY_AUTONOMOUS,
                    requester_has_control=True)
    assert step(state, inp).driving is DrivingMode.IN_PLACE_MANUAL


def test_cage_off_request_cannot_suppress_simultaneous_violation():
    state = ModeState(cage=CageMode.ON, driving=DrivingMode.FULLY_AUTONOMOUS)
    inp = ModeInput(occupancy=Occupancy.CLEAR_ZONE_OCCUPIED,
                    cage_request=CageMode.OFF, requester_has_control=True)
    out = step(state, inp)
    assert out.driving is DrivingMode.EMERGENCY_STOP
    assert out.cage is CageMode.OFF  # takes effect from the next tick on


def test_cage_off_disables_the_latch():
    state = ModeState(cage=CageMode.OFF, driving=DrivingMode.FULLY_AUTONOMOUS)
    out = step(state, ModeInput(occupancy=Occupancy.CLEAR_ZONE_OCCUPIED))
    assert out.driving is DrivingMode.FULLY_AUTONOMOUS


# -- mission bookkeeping ---------------------------------------------------------

def test_mission_lifecycle():
    s = ModeState(driving=DrivingMode.FULLY_AUTONOMOUS)
    s = step(s, ModeInput(destination_active=True))
    assert s.mission is MissionState.ACTIVE
    s = step(s, ModeInput(occupancy=Occupancy.CLEAR_ZONE_OCCUPIED,
                          destination_active=True))
    assert s.mission is MissionState.BLOCKED
    assert s.driving is DrivingMode.EMERGENCY_STOP
    s = step(s, ModeInput(mode_request=DrivingMode.FULLY_AUTONOMOUS,
                          requester_has_control=True, destination_active=True))
    assert s.mission is MissionState.ACTIVE
    s = step(s, ModeInput(at_destination=True, destination_active=True))
    assert s.mission is MissionState.COMPLETED


def test_completed_mission_stays_completed():
    s = ModeState(driving=DrivingMode.FULLY_AUTONOMOUS,
                  mission=MissionState.COMPLETED)
    out = step(s, ModeInput(occupancy=Occupancy.CLEAR_ZONE_OCCUPIED,
                            destination_active=True))
    assert out.mission is MissionState.COMPLETED


# -- long random sequences ---------------------------------------------------------

def test_random_sequences_hold_invariants():
    """10^5 random steps from random starting states."""
    rnd = random.Random(42)
    steps_total = 0
    while steps_total < 100_000:
        state = ModeState(
            cage=rnd.choice(list(CageMode)),
            driving=rnd.choice(list(DrivingMode)),
            mission=rnd.choice(list(MissionState)))
        for _ in range(200):
            inp = random_input(rnd)
            nxt = step(state, inp)
            steps_total += 1
            assert nxt == mode_step_oracle(state, inp)
            violation = state.cage is CageMode.ON and (
                inp.occupancy is Occupancy.CLEAR_ZONE_OCCUPIED
                or inp.camera_valid is Validity.INVALID)
            if violation and state.driving is DrivingMode.EMERGENCY_STOP:
                assert nxt.driving is DrivingMode.EMERGENCY_STOP
            if nxt.driving is DrivingMode.EMERGENCY_STOP:
                assert nxt.mission is not MissionState.ACTIVE
            state = nxt
    assert steps_total >= 100_000
