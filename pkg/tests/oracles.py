"""Independent reference implementations used as test oracles.

Everything in here is written from first principles, separately from the
package code, so that a shared bug cannot hide: containment is done in
vectorized polar form, the Laplacian with explicit loops, clustering via
scipy's connected-component labelling, and ray casting with a per-ray,
per-segment brute-force loop.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from safecage.geometry import RectRegion, SectorRegion


# -- zone containment --------------------------------------------------------

def region_contains_oracle(region, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Vectorized containment for a batch of vehicle-frame points."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    if isinstance(region, RectRegion):
        return ((px >= region.x_min) & (px <= region.x_max)
                & (np.abs(py) <= region.half_width))
    if not isinstance(region, SectorRegion):
        raise TypeError(f"unknown region type: {type(region)!r}")
    c = region.center_y
    r = np.hypot(px, py - c)
    in_band = (r >= region.r_min) & (r <= region.r_max)
    if region.ang_fwd + region.ang_back >= 2.0 * math.pi:
        return in_band
    # arc position relative to the vehicle, measured along travel.
    # the vehicle sits at angle -sign(c)*pi/2 on the circle; a left turn
    # (c > 0) travels counterclockwise, a right turn clockwise.
    theta = np.arctan2(py - c, px)
    theta0 = math.atan2(-c, 0.0)
    if c > 0:
        delta = theta - theta0
    else:
        delta = theta0 - theta
    swept = np.mod(delta + region.ang_back, 2.0 * math.pi)
    return in_band & (swept <= region.ang_fwd + region.ang_back)


def boundary_margin_oracle(region, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """How far each point is from the nearest region boundary.

    Radial terms are in meters and angular terms in radians; the value is
    only used to drop exact boundary ties from grid comparisons, so the
    mixed units do not matter.
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    if isinstance(region, RectRegion):
        return np.minimum.reduce([np.abs(px - region.x_min),
                                  np.abs(px - region.x_max),
                                  np.abs(np.abs(py) - region.half_width)])
    c = region.center_y
    r = np.hypot(px, py - c)
    theta = np.arctan2(py - c, px)
    theta0 = math.atan2(-c, 0.0)
    delta = theta - theta0 if c > 0 else theta0 - theta
    swept = np.mod(delta + region.ang_back, 2.0 * math.pi)
    span = region.ang_fwd + region.ang_back
    margins = [np.abs(r - region.r_min), np.abs(r - region.r_max)]
    if span < 2.0 * math.pi:
        margins += [np.abs(swept), np.abs(swept - span),
                    np.abs(swept - 2.0 * math.pi)]
    return np.minimum.reduce(margins)


def braking_lookahead_oracle(speed: float, reaction_time: float,
                             max_decel: float) -> float:
    """Reaction distance plus braking distance from the standard formula."""
    return speed * reaction_time + speed ** 2 / (2.0 * max_decel)


# -- camera sharpness ---------------------------------------------------------

def laplacian_variance_loop(img: np.ndarray) -> float:
    """Variance of the 3x3 Laplacian, computed with explicit loops."""
    img = np.asarray(img, dtype=float)
    h, w = img.shape
    values = []
    for i in range(1, h - 1):
        for j in range(1, w - 1):
            values.append(-4.0 * img[i, j] + img[i - 1, j] + img[i + 1, j]
                          + img[i, j - 1] + img[i, j + 1])
    values = np.asarray(values)
    return float(((values - values.mean()) ** 2).mean())


# -- clustering ---------------------------------------------------------------

def cluster_partition_scipy(xy: np.ndarray, cell: float,
                            min_points: int) -> set[frozenset[int]]:
    """Point-index partition from 8-connected grid labelling via scipy."""
    cells = np.floor(xy / cell).astype(np.int64)
    cmin = cells.min(axis=0)
    shifted = cells - cmin
    grid = np.zeros(shifted.max(axis=0) + 1, dtype=bool)
    grid[shifted[:, 0], shifted[:, 1]] = True
    labels, _ = ndimage.label(grid, structure=np.ones((3, 3), dtype=int))
    point_labels = labels[shifted[:, 0], shifted[:, 1]]
    partition: dict[int, list[int]] = {}
    for idx, lab in enumerate(point_labels):
        partition.setdefault(int(lab), []).append(idx)
    return {frozenset(members) for members in partition.values()
            if len(members) >= min_points}


# -- ray casting --------------------------------------------------------------

def cast_rays_loop(origin: tuple[float, float], heading: float,
                   segs: np.ndarray, n_rays: int, max_range: float) -> np.ndarray:
    """Brute-force ray/segment intersection, one pair at a time."""
    ox, oy = origin
    ranges = np.full(n_rays, np.inf)
    for i in range(n_rays):
        ang = heading + i * 2.0 * math.pi / n_rays
        dx, dy = math.cos(ang), math.sin(ang)
        best = math.inf
        for (ax, ay), (bx, by) in segs:
            ex, ey = bx - ax, by - ay
            denom = dx * ey - dy * ex
            if abs(denom) <= 1e-12:
                continue
            apx, apy = ax - ox, ay - oy
            t = (apx * ey - apy * ex) / denom
            u = (apx * dy - apy * dx) / denom
            if t > 1e-9 and 0.0 <= u <= 1.0:
                best = min(best, t)
        if best <= max_range:
            ranges[i] = best
    return ranges
