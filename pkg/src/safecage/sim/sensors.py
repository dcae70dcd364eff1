"""Synthetic LiDAR and camera frames for the simulated vehicle.

LiDAR is 360-degree planar ray casting against obstacle polygons; the
planar hits are replicated at configured z layers so the detector's
z-band filter and clustering see realistic input.  A noise model injects
Gaussian range jitter and ghost points below and above the ground
cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..camera import CameraFrame, CameraId
from ..lidar import PointCloud
from .vehicle import SimVehicle


@dataclass(frozen=True)
class LidarConfig:
    n_rays: int = 720
    max_range: float = 30.0
    z_layers: tuple[float, ...] = (0.4, 0.9)


@dataclass(frozen=True)
class NoiseConfig:
    range_sigma: float = 0.0          # m, Gaussian jitter on ranges
    ghost_low_rate: float = 0.0       # points/frame below the cutoff band
    ghost_high_rate: float = 0.0      # points/frame inside the band
    ghost_low_z: tuple[float, float] = (0.0, 0.12)
    ghost_high_z: tuple[float, float] = (0.3, 2.0)
    scatter_radius: float = 25.0      # m, ghost scatter extent

    @staticmethod
    def off() -> "NoiseConfig":
        return NoiseConfig()

    @staticmethod
    def default() -> "NoiseConfig":
        return NoiseConfig(range_sigma=0.01, ghost_low_rate=20.0, ghost_high_rate=1.0)


def polygon_segments(polys: list[np.ndarray]) -> np.ndarray:
    """Stack polygon edges into an (S, 2, 2) array."""
    segs = []
    for poly in polys:
        nxt = np.roll(poly, -1, axis=0)
        segs.append(np.stack([poly, nxt], axis=1))
    if not segs:
        return np.zeros((0, 2, 2))
    return np.concatenate(segs, axis=0)


def cast_rays(origin: tuple[float, float], heading: float, segs: np.ndarray,
              n_rays: int, max_range: float) -> tuple[np.ndarray, np.ndarray]:
    """Ranges and world angles for n_rays evenly spaced rays.

    Rays that hit nothing within max_range get range = inf.
    """
    angles = heading + np.arange(n_rays) * (2.0 * np.pi / n_rays)
    ranges = np.full(n_rays, np.inf)
    if len(segs) == 0:
        return ranges, angles
    d = np.stack([np.cos(angles), np.sin(angles)], axis=1)      # (n, 2)
    a = segs[:, 0]                                               # (s, 2)
    e = segs[:, 1] - segs[:, 0]                                  # (s, 2)
    ap = a - np.asarray(origin)                                  # (s, 2)
    denom = d[:, None, 0] * e[None, :, 1] - d[:, None, 1] * e[None, :, 0]
    cross_ae = ap[None, :, 0] * e[None, :, 1] - ap[None, :, 1] * e[None, :, 0]
    cross_ad = ap[None, :, 0] * d[:, None, 1] - ap[None, :, 1] * d[:, None, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross_ae / denom
        u = cross_ad / denom
    valid = (np.abs(denom) > 1e-12) & (t > 1e-9) & (u >= 0.0) & (u <= 1.0)
    t = np.where(valid, t, np.inf)
    ranges = t.min(axis=1)
    ranges[ranges > max_range] = np.inf
    return ranges, angles


def sample_lidar(polys: list[np.ndarray], vehicle: SimVehicle, cfg: LidarConfig,
                 noise: NoiseConfig, rng: np.random.Generator,
                 timestamp_ns: int = 0) -> PointCloud:
    """One LiDAR frame in the vehicle frame."""
    segs = polygon_segments(polys)
    ranges, angles = cast_rays((vehicle.x, vehicle.y), vehicle.heading, segs,
                               cfg.n_rays, cfg.max_range)
    hit = np.isfinite(ranges)
    r = ranges[hit]
    if noise.range_sigma > 0 and len(r):
        r = r + rng.normal(0.0, noise.range_sigma, size=len(r))
    ang = angles[hit]
    wx = vehicle.x + r * np.cos(ang)
    wy = vehicle.y + r * np.sin(ang)
    # world -> vehicle frame
    ch, sh = math.cos(-vehicle.heading), math.sin(-vehicle.heading)
    dx, dy = wx - vehicle.x, wy - vehicle.y
    vx = ch * dx - sh * dy
    vy = sh * dx + ch * dy

    layers = []
    for z in cfg.z_layers:
        layers.append(np.stack([vx, vy, np.full(len(vx), z)], axis=1))

    for rate, (z0, z1) in ((noise.ghost_low_rate, noise.ghost_low_z),
                           (noise.ghost_high_rate, noise.ghost_high_z)):
        if rate <= 0:
            continue
        n = int(rng.poisson(rate))
        if n == 0:
            continue
        gx = rng.uniform(-noise.scatter_radius, noise.scatter_radius, n)
        gy = rng.uniform(-noise.scatter_radius, noise.scatter_radius, n)
        gz = rng.uniform(z0, z1, n)
        layers.append(np.stack([gx, gy, gz], axis=1))

    points = np.concatenate(layers, axis=0) if layers else np.zeros((0, 3))
    return PointCloud(points, timestamp_ns)


CAMERA_SIZE = (64, 48)  # width, height; thumbnail-scale frames


def make_camera_frame(camera_id: CameraId, tick: int, blocked: bool = False,
                      timestamp_ns: int = 0) -> CameraFrame:
    """Synthetic textured frame; a blocked camera is a flat occlusion."""
    w, h = CAMERA_SIZE
    if blocked:
        img = np.full((h, w), 96, dtype=np.uint8)
    else:
        jj, ii = np.meshgrid(np.arange(w), np.arange(h))
        img = (((ii * 7 + jj * 11 + tick) % 13) * 19).astype(np.uint8)
    return CameraFrame(width=w, height=h, pixels=img.reshape(-1),
                       camera_id=camera_id, timestamp_ns=timestamp_ns)
