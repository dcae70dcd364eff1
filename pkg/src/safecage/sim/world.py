"""World maps: static obstacle polygons, named routes, destinations.

Maps are plain YAML (schema_version 1).  Polygons are world-frame vertex
lists in meters and must be simple (non-self-intersecting).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

MAP_SCHEMA_VERSION = 1


@dataclass
class Destination:
    id: str
    name: str
    x: float
    y: float


@dataclass
class WorldMap:
    name: str
    obstacles: dict[str, np.ndarray] = field(default_factory=dict)
    routes: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    destinations: list[Destination] = field(default_factory=list)

    def destination(self, dest_id: str) -> Destination:
        for d in self.destinations:
            if d.id == dest_id:
                return d
        raise KeyError(f"unknown destination: {dest_id}")


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def is_simple_polygon(poly: np.ndarray) -> bool:
    n = len(poly)
    if n < 3:
        return False
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # shared-vertex neighbors
            if _segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def validate_polygon(name: str, poly: np.ndarray) -> np.ndarray:
    poly = np.asarray(poly, dtype=float).reshape(-1, 2)
    if not is_simple_polygon(poly):
        raise ValueError(f"polygon {name!r} is not simple")
    return poly


def load_map(path: str | Path) -> WorldMap:
    data = yaml.safe_load(Path(path).read_text())
    if data.get("schema_version") != MAP_SCHEMA_VERSION:
        raise ValueError(f"unsupported map schema_version: {data.get('schema_version')!r}")
    world = WorldMap(name=data.get("name", Path(path).stem))
    for name, verts in (data.get("obstacles") or {}).items():
        world.obstacles[name] = validate_polygon(name, verts)
    for name, pts in (data.get("routes") or {}).items():
        world.routes[name] = [(float(x), float(y)) for x, y in pts]
    for d in data.get("destinations") or []:
        world.destinations.append(Destination(id=str(d["id"]), name=d.get("name", str(d["id"])),
                                              x=float(d["x"]), y=float(d["y"])))
    return world


def point_to_polygon_distance(px: float, py: float, poly: np.ndarray) -> float:
    """Distance from a point to the polygon boundary (0 if on it)."""
    best = math.inf
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        ll = ex * ex + ey * ey
        t = 0.0 if ll == 0 else max(0.0, min(1.0, ((px - ax) * ex + (py - ay) * ey) / ll))
        dx, dy = px - (ax + t * ex), py - (ay + t * ey)
        best = min(best, math.hypot(dx, dy))
    return best
