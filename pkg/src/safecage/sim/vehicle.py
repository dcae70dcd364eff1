"""Kinematic bicycle-model vehicle used by the simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..geometry import Gear, VehicleState


@dataclass
class SimVehicle:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0
    steering: float = 0.0
    gear: Gear = Gear.FORWARD
    wheelbase: float = 1.8
    length: float = 2.4
    width: float = 1.2
    max_speed: float = 6.0
    max_decel: float = 3.0       # emergency braking deceleration
    max_steering: float = 0.6
    commanded_accel: float = 0.0
    commanded_steer: float = 0.0
    emergency: bool = False

    def state(self) -> VehicleState:
        return VehicleState(speed=self.speed, steering_angle=self.steering,
                            x=self.x, y=self.y, heading=self.heading, gear=self.gear)

    def front_bumper(self) -> tuple[float, float]:
        return (self.x + math.cos(self.heading) * self.length / 2.0,
                self.y + math.sin(self.heading) * self.length / 2.0)


def step_physics(v: SimVehicle, dt: float) -> None:
    """Advance the bicycle model in place by dt seconds."""
    if not 0.0 < dt <= 0.1:
        raise ValueError("dt must be in (0, 0.1]")
    v.steering = max(-v.max_steering, min(v.max_steering, v.commanded_steer))
    if v.emergency:
        v.speed = max(0.0, v.speed - v.max_decel * dt)
    else:
        v.speed = max(0.0, min(v.max_speed, v.speed + v.commanded_accel * dt))
    direction = -1.0 if v.gear is Gear.REVERSE else 1.0
    ds = direction * v.speed * dt
    v.x += math.cos(v.heading) * ds
    v.y += math.sin(v.heading) * ds
    v.heading += (v.speed / v.wheelbase) * math.tan(v.steering) * dt * direction
