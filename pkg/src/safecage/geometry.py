"""Safe-zone computation around the ego-vehicle.

The zone consists of an inner clear region and an outer focus region,
both derived from the vehicle's current speed and steering angle.  The
clear region covers the braking corridor; the focus region is the clear
region dilated by a constant overhead.  For near-zero steering the
corridor is a rectangle, otherwise an annular circle segment following
the kinematic turning radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

TWO_PI = 2.0 * math.pi


class Gear(Enum):
    FORWARD = "Forward"
    REVERSE = "Reverse"


class ShapeKind(Enum):
    RECTANGLE = "Rectangle"
    CIRCLE_SEGMENT = "CircleSegment"


class ZoneClass(Enum):
    """Containment verdict for a single point."""

    CLEAR = "Clear"
    FOCUS_ONLY = "FocusOnly"
    OUTSIDE = "Outside"


@dataclass(frozen=True)
class VehicleState:
    """Kinematic state of the ego-vehicle.

    Coordinates are world frame; speed in m/s, angles in radians with
    left steering positive.
    """

    speed: float
    steering_angle: float
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    gear: Gear = Gear.FORWARD


@dataclass(frozen=True)
class SafeZoneConfig:
    max_decel: float = 3.0          # m/s^2, braking deceleration
    reaction_time: float = 0.75     # s, budget before braking begins
    vehicle_width: float = 1.2      # m
    vehicle_length: float = 2.4     # m
    wheelbase: float = 1.8          # m, for the kinematic turning radius
    lateral_margin: float = 0.3     # m added around the footprint
    focus_overhead: float = 0.5     # m, focus dilation beyond clear
    straight_threshold: float = 0.05  # rad, below this use a rectangle
    limited_zone_scale: float = 0.6   # zone scale in limited autonomy
    max_steering_angle: float = 0.6   # rad

    def __post_init__(self):
        if self.max_decel <= 0:
            raise ValueError("max_decel must be positive")
        if self.reaction_time < 0:
            raise ValueError("reaction_time must be >= 0")
        if self.focus_overhead <= 0:
            raise ValueError("focus_overhead must be positive")
        if not 0 < self.limited_zone_scale <= 1:
            raise ValueError("limited_zone_scale must be in (0, 1]")


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned corridor in the vehicle frame (x forward, y left)."""

    x_min: float
    x_max: float
    half_width: float

    def contains(self, px: float, py: float) -> bool:
        return self.x_min <= px <= self.x_max and abs(py) <= self.half_width


@dataclass(frozen=True)
class SectorRegion:
    """Annular circle segment about the turning center (0, center_y).

    Angular extents are measured along the travel direction from the
    vehicle origin; ``ang_fwd`` ahead of the vehicle, ``ang_back``
    behind.  A combined extent >= 2*pi degenerates to the full annulus.
    """

    center_y: float
    r_min: float
    r_max: float
    ang_fwd: float
    ang_back: float

    def contains(self, px: float, py: float) -> bool:
        dx = px
        dy = py - self.center_y
        r = math.hypot(dx, dy)
        if not self.r_min <= r <= self.r_max:
            return False
        if self.ang_fwd + self.ang_back >= TWO_PI:
            return True
        # signed angle along travel direction; left turn sweeps ccw.  the
        # membership test is modular so extents beyond pi still work.
        s = 1.0 if self.center_y > 0 else -1.0
        phi0 = -s * math.pi / 2.0
        alpha = s * (math.atan2(dy, dx) - phi0)
        return (alpha + self.ang_back) % TWO_PI <= self.ang_fwd + self.ang_back


Region = RectRegion | SectorRegion


@dataclass(frozen=True)
class SafeZone:
    clear_region: Region
    focus_region: Region
    shape_kind: ShapeKind
    lookahead_distance: float


def _rect(cfg: SafeZoneConfig, margin: float, lookahead: float,
          reverse: bool) -> RectRegion:
    half_len = cfg.vehicle_length / 2.0
    ahead = half_len + margin + (0.0 if reverse else lookahead)
    behind = half_len + margin + (lookahead if reverse else 0.0)
    return RectRegion(x_min=-behind, x_max=ahead,
                      half_width=cfg.vehicle_width / 2.0 + margin)


def _sector(cfg: SafeZoneConfig, margin: float, lookahead: float,
            steering: float, reverse: bool) -> SectorRegion:
    radius = cfg.wheelbase / math.tan(abs(steering))
    half_w = cfg.vehicle_width / 2.0 + margin
    half_len = cfg.vehicle_length / 2.0
    # the footprint corner sits at radius hypot(radius + half_w, half_len
    # + margin) from the turn center and subtends the angle below, so the
    # annular band and the angular extents are widened to cover it
    corner_ang = math.atan2(half_len + margin, radius - half_w)
    return SectorRegion(
        center_y=math.copysign(radius, steering),
        r_min=max(0.0, radius - half_w),
        r_max=math.hypot(radius + half_w, half_len + margin),
        ang_fwd=min(corner_ang + (0.0 if reverse else lookahead) / radius, TWO_PI),
        ang_back=min(corner_ang + (lookahead / radius if reverse else 0.0), TWO_PI),
    )


def _dilate(region: Region, amount: float) -> Region:
    if isinstance(region, RectRegion):
        return RectRegion(region.x_min - amount, region.x_max + amount,
                          region.half_width + amount)
    radius = abs(region.center_y)
    return SectorRegion(
        center_y=region.center_y,
        r_min=max(0.0, region.r_min - amount),
        r_max=region.r_max + amount,
        ang_fwd=min(region.ang_fwd + amount / radius, TWO_PI),
        ang_back=min(region.ang_back + amount / radius, TWO_PI),
    )


def compute_zone(state: VehicleState, cfg: SafeZoneConfig,
                 mode_scale: float = 1.0) -> SafeZone:
    """Derive the clear/focus zone for the current vehicle state.

    ``mode_scale`` shrinks the zone for limited autonomy: it scales both
    the braking lookahead and the lateral margin.
    """
    if not (math.isfinite(state.speed) and math.isfinite(state.steering_angle)):
        raise ValueError("non-finite speed or steering angle")
    if state.speed < 0:
        raise ValueError("speed must be >= 0")
    if not 0 < mode_scale <= 1:
        raise ValueError("mode_scale must be in (0, 1]")

    v = state.speed
    lookahead = mode_scale * (v * cfg.reaction_time + v * v / (2.0 * cfg.max_decel))
    margin = mode_scale * cfg.lateral_margin
    reverse = state.gear is Gear.REVERSE

    if abs(state.steering_angle) <= cfg.straight_threshold:
        clear: Region = _rect(cfg, margin, lookahead, reverse)
        kind = ShapeKind.RECTANGLE
    else:
        clear = _sector(cfg, margin, lookahead, state.steering_angle, reverse)
        kind = ShapeKind.CIRCLE_SEGMENT

    return SafeZone(clear_region=clear, focus_region=_dilate(clear, cfg.focus_overhead),
                    shape_kind=kind, lookahead_distance=lookahead)


def contains(zone: SafeZone, px: float, py: float) -> ZoneClass:
    """Classify a vehicle-frame point against the zone regions."""
    if zone.clear_region.contains(px, py):
        return ZoneClass.CLEAR
    if zone.focus_region.contains(px, py):
        return ZoneClass.FOCUS_ONLY
    return ZoneClass.OUTSIDE


def region_outline(region: Region, max_points: int = 64) -> list[tuple[float, float]]:
    """Polygonal outline of a region (vehicle frame), for wire/UI use."""
    if isinstance(region, RectRegion):
        return [
            (region.x_min, -region.half_width),
            (region.x_max, -region.half_width),
            (region.x_max, region.half_width),
            (region.x_min, region.half_width),
        ]
    n = max_points // 2 - 1
    s = 1.0 if region.center_y > 0 else -1.0
    phi0 = -s * math.pi / 2.0
    span = min(region.ang_fwd + region.ang_back, TWO_PI)
    start = phi0 - s * region.ang_back
    pts: list[tuple[float, float]] = []
    for i in range(n + 1):  # outer arc, travel direction
        phi = start + s * span * i / n
        pts.append((region.r_max * math.cos(phi),
                    region.center_y + region.r_max * math.sin(phi)))
    for i in range(n + 1):  # inner arc, back
        phi = start + s * span * (n - i) / n
        pts.append((region.r_min * math.cos(phi),
                    region.center_y + region.r_min * math.sin(phi)))
    return pts


def zone_payload(zone: SafeZone) -> dict:
    """Wire-serializable form of a zone (both outlines, rounded)."""
    def rnd(outline):
        return [[round(x, 3), round(y, 3)] for x, y in outline]

    return {
        "shape": zone.shape_kind.value,
        "lookahead_m": round(zone.lookahead_distance, 3),
        "clear_outline": rnd(region_outline(zone.clear_region)),
        "focus_outline": rnd(region_outline(zone.focus_region)),
    }
