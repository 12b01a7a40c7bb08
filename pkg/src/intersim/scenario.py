"""Static intersection environment: lanes, lights, central area and the neighbor grid."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

COLORS = ("red", "yellow", "green")
KINDS = ("car", "pedestrian", "bicycle")


class ScenarioError(ValueError):
    """Raised for malformed or inconsistent scenario data."""


@dataclass(frozen=True)
class Lane:
    id: str
    centerline: np.ndarray
    width: float
    direction: np.ndarray
    entry_boundary_midpoint: np.ndarray
    allowed_kinds: frozenset = frozenset(KINDS)

    def __post_init__(self):
        pts = np.asarray(self.centerline, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise ScenarioError(f"lane {self.id}: centerline needs >= 2 points")
        if np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) == 0):
            raise ScenarioError(f"lane {self.id}: consecutive centerline points coincide")
        if not self.width > 0:
            raise ScenarioError(f"lane {self.id}: width must be positive")
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) >= 1e-9:
            raise ScenarioError(f"lane {self.id}: direction must be a unit vector")
        object.__setattr__(self, "centerline", pts)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "entry_boundary_midpoint", np.asarray(self.entry_boundary_midpoint, dtype=float))
        object.__setattr__(self, "allowed_kinds", frozenset(self.allowed_kinds))

    @classmethod
    def from_centerline(cls, id, centerline, width, entry_boundary_midpoint=None, allowed_kinds=KINDS):
        """Build a lane whose travel direction runs from the first to the last centerline point."""
        pts = np.asarray(centerline, dtype=float)
        d = pts[-1] - pts[0]
        d = d / np.linalg.norm(d)
        if entry_boundary_midpoint is None:
            entry_boundary_midpoint = pts[-1]
        return cls(id, pts, float(width), d, entry_boundary_midpoint, frozenset(allowed_kinds))

    @property
    def start(self) -> np.ndarray:
        return self.centerline[0]

    def _segments(self):
        segs = self.__dict__.get("_segs")
        if segs is None:
            segs = []
            s0 = 0.0
            for a, b in zip(self.centerline[:-1].tolist(), self.centerline[1:].tolist()):
                ex, ey = b[0] - a[0], b[1] - a[1]
                L = math.hypot(ex, ey)
                segs.append((a[0], a[1], ex, ey, L, s0))
                s0 += L
            object.__setattr__(self, "_segs", segs)
            pad = 0.5 * self.width
            object.__setattr__(self, "_box", (*(self.centerline.min(axis=0) - pad), *(self.centerline.max(axis=0) + pad)))
        return segs

    def _near_box(self, x: float, y: float) -> bool:
        self._segments()
        x0, y0, x1, y1 = self.__dict__["_box"]
        return x0 <= x <= x1 and y0 <= y <= y1

    def distance_to_centerline(self, p) -> tuple[float, float]:
        """Return (lateral distance, arc-length position) of ``p`` against the centerline."""
        px, py = float(p[0]), float(p[1])
        best = (math.inf, 0.0)
        for ax, ay, ex, ey, L, s0 in self._segments():
            u = ((px - ax) * ex + (py - ay) * ey) / (L * L)
            uc = min(max(u, 0.0), 1.0)
            d = math.hypot(ax + uc * ex - px, ay + uc * ey - py)
            if d < best[0]:
                best = (d, s0 + u * L)
        return best

    @property
    def length(self) -> float:
        seg = self._segments()[-1]
        return seg[5] + seg[4]

    def contains(self, p) -> bool:
        """True if ``p`` lies on the lane strip (within half a width, inside the longitudinal extent)."""
        if not self._near_box(float(p[0]), float(p[1])):
            return False
        d, s = self.distance_to_centerline(p)
        return d <= 0.5 * self.width and -1e-9 <= s <= self.length + 1e-9

    def contains_points(self, points, margin: float = 0.0) -> np.ndarray:
        """Vectorised ``contains`` for an ``(n, 2)`` array, with the half width reduced by ``margin``."""
        P = np.asarray(points, dtype=float).reshape(-1, 2)
        self._segments()
        x0, y0, x1, y1 = self.__dict__["_box"]
        if len(P) and (P[:, 0].max() < x0 or P[:, 0].min() > x1 or P[:, 1].max() < y0 or P[:, 1].min() > y1):
            return np.zeros(len(P), dtype=bool)
        best_d = np.full(len(P), np.inf)
        best_s = np.zeros(len(P))
        for ax, ay, ex, ey, L, s0 in self._segments():
            u = ((P[:, 0] - ax) * ex + (P[:, 1] - ay) * ey) / (L * L)
            uc = np.clip(u, 0.0, 1.0)
            d = np.hypot(ax + uc * ex - P[:, 0], ay + uc * ey - P[:, 1])
            closer = d < best_d
            best_d = np.where(closer, d, best_d)
            best_s = np.where(closer, s0 + u * L, best_s)
        half = max(0.5 * self.width - margin, 0.0)
        return (best_d <= half) & (best_s >= -1e-9) & (best_s <= self.length + 1e-9)


@dataclass(frozen=True)
class TrafficLight:
    stop_line: np.ndarray
    phases: tuple
    applies_to: frozenset

    def __post_init__(self):
        seg = np.asarray(self.stop_line, dtype=float).reshape(2, 2)
        if np.allclose(seg[0], seg[1]):
            raise ScenarioError("stop line endpoints must be distinct")
        phases = tuple((str(c), float(d)) for c, d in self.phases)
        if not phases:
            raise ScenarioError("traffic light needs at least one phase")
        for c, d in phases:
            if c not in COLORS:
                raise ScenarioError(f"unknown light color {c!r}")
            if not d > 0:
                raise ScenarioError("phase durations must be positive")
        object.__setattr__(self, "stop_line", seg)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "applies_to", frozenset(self.applies_to))

    @property
    def cycle_length(self) -> float:
        return sum(d for _, d in self.phases)

    @property
    def midpoint(self) -> np.ndarray:
        return self.stop_line.mean(axis=0)

    def nearest_point(self, p) -> np.ndarray:
        a, b = self.stop_line
        ab = b - a
        u = float(np.dot(np.asarray(p, dtype=float) - a, ab) / np.dot(ab, ab))
        return a + min(max(u, 0.0), 1.0) * ab


def _phase_at(light: TrafficLight, t: float) -> tuple[int, float]:
    tc = math.fmod(t, light.cycle_length)
    acc = 0.0
    for k, (_, dur) in enumerate(light.phases):
        if tc < acc + dur:
            return k, acc + dur - tc
        acc += dur
    # fmod rounding can land exactly on the cycle end
    return 0, light.phases[0][1]


def light_color_at(light: TrafficLight, t: float) -> str:
    """Color of the phase containing ``t`` modulo the cycle length."""
    k, _ = _phase_at(light, t)
    return light.phases[k][0]


def seconds_remaining(light: TrafficLight, t: float) -> float:
    """Seconds until the current phase ends."""
    _, rem = _phase_at(light, t)
    return rem


def point_in_polygon(polygon: np.ndarray, p, eps: float = 1e-9) -> bool:
    """Even-odd test; points on an edge count as inside."""
    x, y = float(p[0]), float(p[1])
    n = len(polygon)
    inside = False
    for k in range(n):
        x1, y1 = polygon[k]
        x2, y2 = polygon[(k + 1) % n]
        # boundary check
        ex, ey = x2 - x1, y2 - y1
        cross = ex * (y - y1) - ey * (x - x1)
        if abs(cross) <= eps * max(1.0, math.hypot(ex, ey)):
            if min(x1, x2) - eps <= x <= max(x1, x2) + eps and min(y1, y2) - eps <= y <= max(y1, y2) + eps:
                return True
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * ex / ey
            if x < xi:
                inside = not inside
    return inside


def points_in_polygon(polygon: np.ndarray, points) -> np.ndarray:
    """Vectorised even-odd test; points on the boundary count as inside."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    poly = np.asarray(polygon, dtype=float)
    x, y = P[:, 0], P[:, 1]
    inside = np.zeros(len(P), dtype=bool)
    edge = np.zeros(len(P), dtype=bool)
    eps = 1e-9
    for (ax, ay), (bx, by) in zip(poly.tolist(), poly[np.r_[1:len(poly), 0]].tolist()):
        ex, ey = bx - ax, by - ay
        cross = ex * (y - ay) - ey * (x - ax)
        edge |= ((np.abs(cross) <= eps * max(1.0, math.hypot(ex, ey)))
                 & (x >= min(ax, bx) - eps) & (x <= max(ax, bx) + eps)
                 & (y >= min(ay, by) - eps) & (y <= max(ay, by) + eps))
        if ey != 0.0:
            crosses = (ay > y) != (by > y)
            inside ^= crosses & (x < ax + (y - ay) * ex / ey)
    return inside | edge


def polygon_area(polygon: np.ndarray) -> float:
    x, y = polygon[:, 0], polygon[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass(frozen=True)
class Scenario:
    lanes: tuple
    lights: tuple
    central_area: np.ndarray
    grid_cell_size: float = 10.0
    frame_rate: float = 30.0
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        poly = np.asarray(self.central_area, dtype=float)
        if poly.ndim != 2 or len(poly) < 3 or abs(polygon_area(poly)) <= 0:
            raise ScenarioError("central_area must be a non-degenerate polygon")
        if not self.grid_cell_size > 0:
            raise ScenarioError("grid_cell_size must be positive")
        if not self.frame_rate > 0:
            raise ScenarioError("frame_rate must be positive")
        ids = [lane.id for lane in self.lanes]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate lane ids")
        for light in self.lights:
            missing = sorted(set(light.applies_to) - set(ids))
            if missing:
                raise ScenarioError(f"light refers to unknown lanes: {missing}")
        object.__setattr__(self, "central_area", poly)
        object.__setattr__(self, "lanes", tuple(self.lanes))
        object.__setattr__(self, "lights", tuple(self.lights))

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate

    def lane(self, lane_id: str) -> Lane:
        for lane in self.lanes:
            if lane.id == lane_id:
                return lane
        raise KeyError(lane_id)

    def has_lane(self, lane_id: str) -> bool:
        return any(lane.id == lane_id for lane in self.lanes)

    def light_for(self, lane_id: str) -> TrafficLight | None:
        for light in self.lights:
            if lane_id in light.applies_to:
                return light
        return None

    @cached_property
    def extent(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned ``(low, high)`` corners bounding every lane strip and the central area."""
        pts = [self.central_area]
        for lane in self.lanes:
            pts.append(lane.centerline - lane.width / 2)
            pts.append(lane.centerline + lane.width / 2)
        allp = np.vstack(pts)
        return allp.min(axis=0), allp.max(axis=0)

    def outside(self, p, margin: float = 0.0) -> bool:
        """True if ``p`` lies beyond the scene extent grown by ``margin``."""
        low, high = self.extent
        return bool(np.any(np.asarray(p) < low - margin) or np.any(np.asarray(p) > high + margin))

    def lanes_containing(self, p) -> list[Lane]:
        return [lane for lane in self.lanes if lane.contains(p)]

    def on_route(self, points, lane_ids, margin: float = 0.0) -> np.ndarray:
        """Which points keep a body of half-width ``margin`` on one of ``lane_ids`` or in the central area."""
        P = np.asarray(points, dtype=float).reshape(-1, 2)
        ok = np.zeros(len(P), dtype=bool)
        for lane_id in dict.fromkeys(lane_ids):
            if lane_id is not None:
                ok |= self.lane(lane_id).contains_points(P, margin)
        if not ok.all():
            rest = ~ok
            ok[rest] = points_in_polygon(self.central_area, P[rest])
        return ok


def in_central_area(scenario: Scenario, p) -> bool:
    return point_in_polygon(scenario.central_area, p)


class SpatialGrid:
    """Uniform hash grid mapping integer cells to agent ids."""

    def __init__(self, cell_size: float):
        if not cell_size > 0:
            raise ValueError("cell_size must be positive")
        self.cell_size = float(cell_size)
        self.cells: dict[tuple[int, int], list] = defaultdict(list)
        self._where: dict = {}

    def cell_of(self, p) -> tuple[int, int]:
        return (math.floor(p[0] / self.cell_size), math.floor(p[1] / self.cell_size))

    def insert(self, agent_id, p) -> None:
        c = self.cell_of(p)
        self.cells[c].append(agent_id)
        self._where[agent_id] = c

    def move(self, agent_id, p) -> None:
        c = self.cell_of(p)
        old = self._where.get(agent_id)
        if old == c:
            return
        if old is not None:
            self.cells[old].remove(agent_id)
            if not self.cells[old]:
                del self.cells[old]
        self.cells[c].append(agent_id)
        self._where[agent_id] = c

    def remove(self, agent_id) -> None:
        c = self._where.pop(agent_id)
        self.cells[c].remove(agent_id)
        if not self.cells[c]:
            del self.cells[c]

    @classmethod
    def build(cls, cell_size: float, positions: dict) -> "SpatialGrid":
        grid = cls(cell_size)
        for aid in sorted(positions):
            grid.insert(aid, positions[aid])
        return grid

    def assignment(self) -> dict:
        return dict(self._where)

    def __contains__(self, agent_id) -> bool:
        return agent_id in self._where


def neighbors_of(grid: SpatialGrid, agent_id, positions=None) -> list:
    """Agents (excluding ``agent_id``) in the 3x3 block of cells around the agent's cell.

    ``positions`` is accepted for interface symmetry; cell membership is read from the grid.
    """
    if agent_id not in grid:
        raise KeyError(f"agent {agent_id!r} is not registered in the grid")
    cx, cy = grid._where[agent_id]
    out = []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for other in grid.cells.get((cx + dx, cy + dy), ()):
                if other != agent_id:
                    out.append(other)
    return sorted(out)


# -- file format ---------------------------------------------------------------

def scenario_from_dict(doc: dict) -> Scenario:
    lanes = []
    for item in doc["lanes"]:
        lanes.append(
            Lane.from_centerline(
                item["id"],
                item["centerline"],
                item.get("width", 3.5),
                entry_boundary_midpoint=item.get("entry_boundary_midpoint"),
                allowed_kinds=item.get("allowed_kinds", KINDS),
            )
        )
    lights = [
        TrafficLight(np.asarray(item["stop_line"], dtype=float), tuple(map(tuple, item["phases"])), frozenset(item["applies_to"]))
        for item in doc.get("lights", [])
    ]
    return Scenario(
        lanes=tuple(lanes),
        lights=tuple(lights),
        central_area=np.asarray(doc["central_area"], dtype=float),
        grid_cell_size=float(doc.get("grid_cell_size", 10.0)),
        frame_rate=float(doc.get("frame_rate", 30.0)),
        config=dict(doc.get("config", {})),
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "frame_rate": scenario.frame_rate,
        "grid_cell_size": scenario.grid_cell_size,
        "central_area": scenario.central_area.tolist(),
        "lanes": [
            {
                "id": lane.id,
                "centerline": lane.centerline.tolist(),
                "width": lane.width,
                "entry_boundary_midpoint": lane.entry_boundary_midpoint.tolist(),
                "allowed_kinds": sorted(lane.allowed_kinds),
            }
            for lane in scenario.lanes
        ],
        "lights": [
            {
                "stop_line": light.stop_line.tolist(),
                "phases": [list(p) for p in light.phases],
                "applies_to": sorted(light.applies_to),
            }
            for light in scenario.lights
        ],
        "config": scenario.config,
    }


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2))
