"""LiDAR obstacle detector: ground cutoff, grid clustering, zone check.

Per-frame and stateless: a point cloud in the vehicle frame goes through
a z-band filter, grid connected-component clustering with a minimum
cluster size (noise rejection), and a containment test against the safe
zone, yielding one of three occupancy verdicts.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import SafeZone, ZoneClass, contains


class Occupancy(Enum):
    SAFE_ZONE_FREE = "Safe Zone Free"
    FOCUS_ZONE_OCCUPIED = "Focus Zone Occupied"
    CLEAR_ZONE_OCCUPIED = "Clear Zone Occupied"


# severity ordering used by verdict monotonicity checks
OCCUPANCY_ORDER = [Occupancy.SAFE_ZONE_FREE, Occupancy.FOCUS_ZONE_OCCUPIED,
                   Occupancy.CLEAR_ZONE_OCCUPIED]


@dataclass(frozen=True)
class PointCloud:
    """(N, 3) float array of x, y, z in the vehicle frame, meters."""

    points: np.ndarray
    timestamp_ns: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.isfinite(pts).all():
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class DetectorConfig:
    z_cutoff: float = 0.15        # m, drop ground/ghost returns below
    z_max: float = 2.5            # m, drop overhead returns above
    cluster_cell: float = 0.2     # m, clustering grid cell size
    min_cluster_points: int = 3   # smaller groups are noise

    def __post_init__(self):
        if self.z_cutoff >= self.z_max:
            raise ValueError("z_cutoff must be below z_max")
        if self.cluster_cell <= 0:
            raise ValueError("cluster_cell must be positive")
        if self.min_cluster_points < 1:
            raise ValueError("min_cluster_points must be >= 1")


@dataclass(frozen=True)
class Cluster:
    member_points: np.ndarray  # (N, 2) planar points
    centroid: tuple[float, float]
    point_count: int


@dataclass(frozen=True)
class ZoneOccupancy:
    value: Occupancy
    offending_cluster: Cluster | None = None

    def __post_init__(self):
        occupied = self.value is not Occupancy.SAFE_ZONE_FREE
        if occupied != (self.offending_cluster is not None):
            raise ValueError("offending_cluster present iff zone occupied")


def filter_ground(cloud: PointCloud, cfg: DetectorConfig) -> PointCloud:
    """Keep points with z in [z_cutoff, z_max]; timestamp preserved."""
    z = cloud.points[:, 2]
    keep = (z >= cfg.z_cutoff) & (z <= cfg.z_max)
    return PointCloud(cloud.points[keep], cloud.timestamp_ns)


def cluster(cloud: PointCloud, cfg: DetectorConfig) -> list[Cluster]:
    """Group planar points by 8-connected occupied grid cells.

    Groups with fewer than min_cluster_points points are discarded as
    noise.  Output order follows the first point of each cluster.
    """
    if len(cloud) == 0:
        return []
    xy = cloud.points[:, :2]
    cells = np.floor(xy / cfg.cluster_cell).astype(np.int64)
    members: dict[tuple[int, int], list[int]] = defaultdict(list)
    for idx, (cx, cy) in enumerate(map(tuple, cells)):
        members[(cx, cy)].append(idx)

    seen: set[tuple[int, int]] = set()
    clusters: list[Cluster] = []
    for start in members:  # insertion order keeps this deterministic
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        point_idx: list[int] = []
        while stack:
            cx, cy = stack.pop()
            point_idx.extend(members[(cx, cy)])
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    nb = (cx + dx, cy + dy)
                    if nb in members and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
        if len(point_idx) < cfg.min_cluster_points:
            continue
        point_idx.sort()
        pts = xy[point_idx]
        clusters.append(Cluster(member_points=pts,
                                centroid=(float(pts[:, 0].mean()),
                                          float(pts[:, 1].mean())),
                                point_count=len(pts)))
    return clusters


def assess(clusters: list[Cluster], zone: SafeZone) -> ZoneOccupancy:
    """Zone verdict over all cluster points; clear-zone hits dominate."""
    focus_hit: Cluster | None = None
    for cl in clusters:
        for px, py in cl.member_points:
            verdict = contains(zone, float(px), float(py))
            if verdict is ZoneClass.CLEAR:
                return ZoneOccupancy(Occupancy.CLEAR_ZONE_OCCUPIED, cl)
            if verdict is ZoneClass.FOCUS_ONLY and focus_hit is None:
                focus_hit = cl
    if focus_hit is not None:
        return ZoneOccupancy(Occupancy.FOCUS_ZONE_OCCUPIED, focus_hit)
    return ZoneOccupancy(Occupancy.SAFE_ZONE_FREE)


def detect(cloud: PointCloud, cfg: DetectorConfig, zone: SafeZone) -> ZoneOccupancy:
    """Full detector pipeline for one frame."""
    return assess(cluster(filter_ground(cloud, cfg), cfg), zone)
